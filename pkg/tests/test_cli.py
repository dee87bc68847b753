import json
import shutil
import subprocess

import numpy as np
import pytest

from drsslocate.bench import CSV_HEADER
from drsslocate.cli import main
from drsslocate.crlb import CrlbRequest, crlb
from drsslocate.scenario import fig1_scenario, load_scenario


def _write_config(tmp_path, **overrides):
    data = {
        "family": "ple_sweep",
        "gamma": [2.0, 6.0],
        "sigma_n2": 4.0,
        "trials": 2,
        "estimators": ["u_blue", "le"],
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_run_with_config_writes_csv(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    code = main(
        ["run", "--config", str(_write_config(tmp_path)), "--out", str(out)]
    )
    assert code == 0
    assert "wrote 4 rows" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[1] == CSV_HEADER
    assert len(lines) == 6


def test_run_json_format(tmp_path):
    out = tmp_path / "rows.json"
    code = main(
        [
            "run",
            "--config",
            str(_write_config(tmp_path)),
            "--out",
            str(out),
            "--format",
            "json",
        ]
    )
    assert code == 0
    rows = json.loads(out.read_text())
    assert {r["estimator"] for r in rows} == {"u_blue", "le"}


def test_run_flag_overrides_config(tmp_path):
    out = tmp_path / "rows.csv"
    code = main(
        [
            "run",
            "--config",
            str(_write_config(tmp_path)),
            "--trials",
            "3",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    for line in out.read_text().splitlines()[2:]:
        cells = line.split(",")
        assert int(cells[5]) + int(cells[6]) == 3


def test_run_family_without_config(tmp_path):
    out = tmp_path / "rows.csv"
    code = main(
        ["run", "--family", "placement", "--trials", "2", "--seed", "4", "--out", str(out)]
    )
    assert code == 0
    body = out.read_text().splitlines()[2:]
    assert len(body) == 8
    assert {line.split(",")[1] for line in body} == {"good", "bad"}


def test_scenario_then_crlb_round_trip(tmp_path, capsys):
    layout = tmp_path / "room.json"
    assert main(["scenario", "--preset", "fig1", "--out", str(layout)]) == 0
    capsys.readouterr()
    loaded = load_scenario(layout)
    np.testing.assert_array_equal(loaded.anchors, fig1_scenario().anchors)

    code = main(
        ["crlb", "--scenario", str(layout), "--gamma", "4", "--sigma-n2", "1"]
    )
    assert code == 0
    bounds = json.loads(capsys.readouterr().out)
    assert set(bounds) == {"joint_location", "joint_ple", "location", "ple"}
    expected = crlb(CrlbRequest(fig1_scenario(), 4.0, 1.0, "joint_location"))
    assert bounds["joint_location"] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("preset", ["good", "bad"])
def test_scenario_presets(tmp_path, preset):
    out = tmp_path / f"{preset}.json"
    assert main(["scenario", "--preset", preset, "--out", str(out)]) == 0
    assert load_scenario(out).n_anchors >= 5


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--out", "x.csv"],
        ["run", "--family", "warp", "--out", "x.csv"],
        ["scenario", "--out", "x.json"],
        [],
    ],
)
def test_flag_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_bad_config_file_exits_one(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    out = tmp_path / "rows.csv"
    assert main(["run", "--config", str(missing), "--out", str(out)]) == 1

    not_a_dict = tmp_path / "list.json"
    not_a_dict.write_text("[1, 2]")
    assert main(["run", "--config", str(not_a_dict), "--out", str(out)]) == 1

    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"family": "noise_sweep", "sigma": 2.0}))
    assert main(["run", "--config", str(unknown), "--out", str(out)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_crlb_rejects_bad_parameters(tmp_path, capsys):
    layout = tmp_path / "room.json"
    main(["scenario", "--preset", "fig1", "--out", str(layout)])
    capsys.readouterr()
    code = main(
        ["crlb", "--scenario", str(layout), "--gamma", "0", "--sigma-n2", "1"]
    )
    assert code == 1
    code = main(
        ["crlb", "--scenario", str(tmp_path / "gone.json"), "--gamma", "4", "--sigma-n2", "1"]
    )
    assert code == 1


def test_runtime_failures_exit_two(tmp_path, capsys):
    out = tmp_path / "no" / "such" / "dir" / "rows.csv"
    code = main(
        ["run", "--config", str(_write_config(tmp_path)), "--out", str(out)]
    )
    assert code == 2
    assert "runtime failure" in capsys.readouterr().err


def test_installed_entry_point_runs(tmp_path):
    exe = shutil.which("bench")
    if exe is None:
        pytest.skip("console script not on PATH")
    out = tmp_path / "room.json"
    proc = subprocess.run(
        [exe, "scenario", "--preset", "fig1", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert out.exists()
