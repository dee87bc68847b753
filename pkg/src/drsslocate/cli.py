"""Command line front end.

Three subcommands:

* ``bench run``: execute a benchmark family and write aggregated rows.
* ``bench scenario``: write a named preset layout to a JSON file.
* ``bench crlb``: print the four bounds for a stored layout.

Exit codes: 0 on success, 1 for configuration problems (bad flags, bad
config file, unknown keys), 2 for unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    FAMILIES,
    ExperimentConfig,
    default_config,
    run_experiment,
    write_results,
)
from .crlb import CrlbRequest, crlb
from .scenario import clustered_scenario, fig1_scenario, load_scenario, save_scenario


class _ConfigError(Exception):
    """Raised for any misconfiguration; mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise _ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark family")
    run_p.add_argument("--family", choices=FAMILIES, help="experiment family")
    run_p.add_argument("--config", type=Path, help="JSON config file")
    run_p.add_argument("--trials", type=int, help="Monte Carlo trials per sweep point")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--out", type=Path, required=True, help="output file")
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")

    scen_p = sub.add_parser("scenario", help="write a preset layout")
    scen_p.add_argument("--preset", choices=("fig1", "good", "bad"), required=True)
    scen_p.add_argument("--out", type=Path, required=True)

    crlb_p = sub.add_parser("crlb", help="print bounds for a stored layout")
    crlb_p.add_argument("--scenario", type=Path, required=True)
    crlb_p.add_argument("--gamma", type=float, required=True)
    crlb_p.add_argument("--sigma-n2", type=float, required=True)
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise _ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(raw, dict):
            raise _ConfigError("config file must hold a JSON object")
        if args.family is not None:
            raw["family"] = args.family
        if args.trials is not None:
            raw["trials"] = args.trials
        if args.seed is not None:
            raw["seed"] = args.seed
        try:
            return ExperimentConfig.from_dict(raw)
        except (TypeError, ValueError) as exc:
            raise _ConfigError(str(exc)) from exc
    if args.family is None:
        raise _ConfigError("either --family or --config is required")
    try:
        config = default_config(args.family)
        overrides = {}
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            data = {f: getattr(config, f) for f in (
                "family", "trials", "n_anchors", "field_side", "gamma", "sigma_n2",
                "sigma_gamma2", "sigma_s2", "estimators", "seed", "gamma_init",
                "bcd_iterations",
            )}
            data.update(overrides)
            config = ExperimentConfig(**data)
        return config
    except (TypeError, ValueError) as exc:
        raise _ConfigError(str(exc)) from exc


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rows = run_experiment(config)
    write_results(rows, args.out, args.format)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_scenario(args: argparse.Namespace) -> int:
    if args.preset == "fig1":
        scenario = fig1_scenario()
    else:
        scenario = clustered_scenario(args.preset)
    save_scenario(scenario, args.out)
    print(f"wrote {args.preset} layout to {args.out}")
    return 0


def _cmd_crlb(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise _ConfigError(f"cannot load scenario: {exc}") from exc
    if not args.gamma > 0 or not args.sigma_n2 > 0:
        raise _ConfigError("gamma and sigma-n2 must be positive")
    bounds = {
        kind: crlb(CrlbRequest(scenario, args.gamma, args.sigma_n2, kind))
        for kind in ("joint_location", "joint_ple", "location", "ple")
    }
    print(json.dumps(bounds, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "scenario":
            return _cmd_scenario(args)
        return _cmd_crlb(args)
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
