"""Monte Carlo benchmark harness.

Six experiment families compare the estimators under controlled conditions:

* ``placement``: fixed good/bad anchor placements, random target per trial.
* ``noise_sweep``: random layouts, sweep of the RSS noise variance.
* ``ple_sweep``: random layouts, sweep of the path-loss exponent.
* ``ple_uncertainty``: the model is built with a perturbed exponent while
  measurements use the true one; sweeps either the perturbation variance
  or the exponent.
* ``anchor_uncertainty``: the model is built with perturbed anchor
  coordinates; sweeps either the perturbation variance or the exponent.
* ``bcd``: the alternating joint estimator, reported at fixed sweep counts.

Each trial draws its own generator from (master seed, trial index), so
trials are independent of execution order and safe to distribute.  RMSE is
computed over the trials where an estimator succeeded; failures are counted
per estimator and reported alongside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import estimators as est
from .channel import ChannelParams, drss_from_rss, sample_rss
from .crlb import CrlbRequest, crlb
from .model import build_unwhitened, build_whitened
from .scenario import Scenario, clustered_scenario, random_scenario, random_target

FAMILIES = (
    "placement",
    "noise_sweep",
    "ple_sweep",
    "ple_uncertainty",
    "anchor_uncertainty",
    "bcd",
)
KNOWN_PLE_ESTIMATORS = ("u_blue", "a_blue", "le", "rsdpe")

CSV_HEADER = "family,sweep_value,estimator,rmse_m,crlb_m,trials_used,failures"
_CSV_COMMENT = (
    "# rmse_m is computed over each estimator's successful trials; "
    "crlb_m is the bound averaged over all trials"
)

_SWEEPABLE = ("gamma", "sigma_n2", "sigma_gamma2", "sigma_s2")


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run.

    Exactly one of ``gamma``, ``sigma_n2``, ``sigma_gamma2`` and
    ``sigma_s2`` may be a list, which the family sweeps over; the
    ``placement`` and ``bcd`` families have built-in sweeps (layout label
    and sweep count) and require all four to be scalars.
    """

    family: str
    trials: int = 200
    n_anchors: int = 10
    field_side: float = 50.0
    gamma: float | tuple = 4.0
    sigma_n2: float | tuple = 1.0
    sigma_gamma2: float | tuple = 0.0
    sigma_s2: float | tuple = 0.0
    estimators: tuple = KNOWN_PLE_ESTIMATORS
    seed: int = 0
    gamma_init: float = 4.0
    bcd_iterations: tuple = (1, 2, 3, 5)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n_anchors < 5:
            raise ValueError("need at least 5 anchors for 2-d layouts")
        if self.field_side <= 0:
            raise ValueError("field_side must be positive")
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "bcd_iterations", tuple(int(k) for k in self.bcd_iterations))
        for name in self.estimators:
            if name not in KNOWN_PLE_ESTIMATORS:
                raise ValueError(f"unknown estimator {name!r}")
        for name in _SWEEPABLE:
            value = getattr(self, name)
            if isinstance(value, (list, tuple, np.ndarray)):
                seq = tuple(float(v) for v in value)
                if not seq:
                    raise ValueError(f"{name} sweep list is empty")
                object.__setattr__(self, name, seq)
        if not self.bcd_iterations or any(k < 1 for k in self.bcd_iterations):
            raise ValueError("bcd_iterations must be positive sweep counts")
        if not self.gamma_init > 0:
            raise ValueError("gamma_init must be positive")
        self._sweep_field()  # validates list-ness rules

    def _sweep_field(self) -> str | None:
        listed = [n for n in _SWEEPABLE if isinstance(getattr(self, n), tuple)]
        if self.family in ("placement", "bcd"):
            if listed:
                raise ValueError(
                    f"family {self.family!r} has a built-in sweep; "
                    f"{listed[0]} must be a scalar"
                )
            return None
        if len(listed) > 1:
            raise ValueError(f"only one parameter may sweep, got {listed}")
        allowed = {
            "noise_sweep": ("sigma_n2",),
            "ple_sweep": ("gamma",),
            "ple_uncertainty": ("sigma_gamma2", "gamma"),
            "anchor_uncertainty": ("sigma_s2", "gamma"),
        }[self.family]
        if not listed:
            return allowed[0]
        if listed[0] not in allowed:
            raise ValueError(
                f"family {self.family!r} sweeps one of {allowed}, not {listed[0]}"
            )
        return listed[0]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "family" not in data:
            raise ValueError("config must name a family")
        return cls(**data)

    def sweep_points(self) -> tuple:
        if self.family == "placement":
            return ("good", "bad")
        if self.family == "bcd":
            # One pass over the trials; the per-iteration rows come from the
            # labels that _run_bcd_trial emits.
            return (None,)
        name = self._sweep_field()
        value = getattr(self, name)
        if isinstance(value, tuple):
            return value
        return (float(value),)

    def resolved(self, sweep_value) -> dict:
        """Scalar channel/uncertainty parameters at one sweep point."""
        name = None if self.family in ("placement", "bcd") else self._sweep_field()
        out = {}
        for key in _SWEEPABLE:
            out[key] = float(sweep_value) if key == name else float(getattr(self, key))
        return out


def default_config(family: str, trials: int = 200, seed: int = 0) -> ExperimentConfig:
    """Desk-scale defaults per family."""
    base = dict(family=family, trials=trials, seed=seed)
    presets = {
        "placement": dict(gamma=4.0, sigma_n2=1.0),
        "noise_sweep": dict(gamma=4.0, sigma_n2=(0.25, 1.0, 4.0, 10.0, 25.0)),
        "ple_sweep": dict(gamma=(2.0, 3.0, 4.0, 5.0, 6.0), sigma_n2=10.0),
        "ple_uncertainty": dict(
            gamma=4.0, sigma_n2=1.0, sigma_gamma2=(0.1, 0.5, 1.0, 2.0, 4.0)
        ),
        "anchor_uncertainty": dict(
            gamma=4.0, sigma_n2=1.0, sigma_s2=(1.0, 5.0, 10.0, 20.0)
        ),
        "bcd": dict(gamma=2.0, sigma_n2=1.0, gamma_init=4.0),
    }
    if family not in presets:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    base.update(presets[family])
    return ExperimentConfig(**base)


@dataclass(frozen=True)
class ResultRow:
    """One aggregated line of benchmark output."""

    family: str
    sweep_value: float | str
    estimator: str
    rmse_m: float | None
    crlb_m: float | None
    trials_used: int
    failures: int

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "sweep_value": self.sweep_value,
            "estimator": self.estimator,
            "rmse_m": self.rmse_m,
            "crlb_m": self.crlb_m,
            "trials_used": self.trials_used,
            "failures": self.failures,
        }


_ESTIMATOR_FUNCS = {
    "u_blue": est.u_blue,
    "a_blue": est.a_blue,
    "le": est.le,
}


def _trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, trial_index)))


def run_trial(
    config: ExperimentConfig, sweep_value, trial_index: int
) -> tuple[dict, dict]:
    """Run one Monte Carlo trial at one sweep point.

    Returns ``(sq_err, bounds)`` where ``sq_err`` maps row labels to the
    squared error of that estimator for this trial (None on failure) and
    ``bounds`` maps row labels to the per-trial bound value.
    """
    rng = _trial_rng(config.seed, trial_index)
    params = config.resolved(sweep_value)
    gamma_true = params["gamma"]
    sigma_n2 = params["sigma_n2"]

    if config.family == "placement":
        scenario = random_target(clustered_scenario(str(sweep_value)), rng)
    else:
        scenario = random_scenario(config.n_anchors, config.field_side, 2, rng)

    channel = ChannelParams(
        gamma=gamma_true, sigma_chi=math.sqrt(sigma_n2), sigma_p0=0.0, p0_nominal=0.0
    )
    drss = drss_from_rss(sample_rss(scenario, channel, rng))

    if config.family == "bcd":
        return _run_bcd_trial(config, scenario, drss, gamma_true, sigma_n2)

    # Model inputs, possibly perturbed while the truth stays clean.
    gamma_model = gamma_true
    if params["sigma_gamma2"] > 0:
        gamma_model = gamma_true + rng.normal(0.0, math.sqrt(params["sigma_gamma2"]))
    anchors_model = scenario.anchors
    if params["sigma_s2"] > 0:
        anchors_model = scenario.anchors + rng.normal(
            0.0, math.sqrt(params["sigma_s2"]), size=scenario.anchors.shape
        )

    bound = crlb(CrlbRequest(scenario, gamma_true, sigma_n2, "location"))
    sq_err: dict[str, float | None] = {}
    bounds = {name: bound for name in config.estimators}
    try:
        model = build_whitened(build_unwhitened(drss, anchors_model, gamma_model))
    except ValueError:
        return {name: None for name in config.estimators}, bounds
    for name in config.estimators:
        try:
            if name == "rsdpe":
                result = est.rsdpe(model.phi, model.rho)
            else:
                result = _ESTIMATOR_FUNCS[name](model)
            err = float(np.linalg.norm(result.x_hat - scenario.target))
            sq_err[name] = err * err
        except (est.EstimationError, np.linalg.LinAlgError):
            sq_err[name] = None
    return sq_err, bounds


def _run_bcd_trial(
    config: ExperimentConfig,
    scenario: Scenario,
    drss,
    gamma_true: float,
    sigma_n2: float,
) -> tuple[dict, dict]:
    loc_bound = crlb(CrlbRequest(scenario, gamma_true, sigma_n2, "joint_location"))
    ple_bound = crlb(CrlbRequest(scenario, gamma_true, sigma_n2, "joint_ple"))
    sq_err: dict[str, float | None] = {}
    bounds: dict[str, float] = {}
    max_k = max(config.bcd_iterations)
    try:
        # A tolerance far below measurement noise forces all max_k sweeps so
        # every requested iteration count has a recorded iterate.
        result = est.rsdp_bcde(
            drss,
            scenario.anchors,
            est.BcdOpts(gamma_init=config.gamma_init, xi=1e-12, max_iter=max_k),
        )
        history = result.diagnostics.history
    except (est.EstimationError, np.linalg.LinAlgError, ValueError):
        history = None
    for k in config.bcd_iterations:
        loc_key = f"rsdp_bcde@{k}"
        ple_key = f"rsdp_bcde_ple@{k}"
        bounds[loc_key] = loc_bound
        bounds[ple_key] = ple_bound
        if history is None:
            sq_err[loc_key] = None
            sq_err[ple_key] = None
            continue
        x_k, gamma_k = history[min(k, len(history)) - 1]
        err = float(np.linalg.norm(x_k - scenario.target))
        sq_err[loc_key] = err * err
        sq_err[ple_key] = (gamma_k - gamma_true) ** 2
    return sq_err, bounds


def _row_labels(config: ExperimentConfig) -> tuple[str, ...]:
    if config.family == "bcd":
        labels = []
        for k in config.bcd_iterations:
            labels.append(f"rsdp_bcde@{k}")
            labels.append(f"rsdp_bcde_ple@{k}")
        return tuple(labels)
    return config.estimators


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run all trials at every sweep point and aggregate."""
    rows: list[ResultRow] = []
    for sweep_value in config.sweep_points():
        sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        bound_sums: dict[str, float] = {}
        bound_counts: dict[str, int] = {}
        for trial in range(config.trials):
            sq_err, bounds = run_trial(config, sweep_value, trial)
            for key, val in sq_err.items():
                if val is not None:
                    sums[key] = sums.get(key, 0.0) + val
                    counts[key] = counts.get(key, 0) + 1
            for key, val in bounds.items():
                bound_sums[key] = bound_sums.get(key, 0.0) + val
                bound_counts[key] = bound_counts.get(key, 0) + 1
        for label in _row_labels(config):
            used = counts.get(label, 0)
            rmse = math.sqrt(sums[label] / used) if used else None
            n_bounds = bound_counts.get(label, 0)
            avg_bound = bound_sums[label] / n_bounds if n_bounds else None
            if config.family == "bcd":
                estimator, _, k = label.partition("@")
                sweep_out: float | str = int(k)
            else:
                estimator = label
                sweep_out = sweep_value
            rows.append(
                ResultRow(
                    family=config.family,
                    sweep_value=sweep_out,
                    estimator=estimator,
                    rmse_m=rmse,
                    crlb_m=avg_bound,
                    trials_used=used,
                    failures=config.trials - used,
                )
            )
    return rows


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(value, ".10g")


def write_csv(rows: list[ResultRow], path: str | Path) -> None:
    """Write rows as CSV with a fixed header; byte-identical across runs."""
    lines = [_CSV_COMMENT, CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.family,
                    _format_value(row.sweep_value),
                    row.estimator,
                    _format_value(row.rmse_m),
                    _format_value(row.crlb_m),
                    str(row.trials_used),
                    str(row.failures),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(rows: list[ResultRow], path: str | Path) -> None:
    """Write rows as a JSON list mirroring the CSV columns."""
    Path(path).write_text(json.dumps([r.to_dict() for r in rows], indent=2) + "\n")


def write_results(rows: list[ResultRow], path: str | Path, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_csv(rows, path)
    elif fmt == "json":
        write_json(rows, path)
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
