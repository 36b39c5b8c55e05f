import json

import numpy as np
import pytest

from anelastic.cli import main, parse_config, shipped_configs
from anelastic.diagnostics import COLUMNS, MONITOR_COLUMNS
from anelastic.errors import ConfigInvalid
from anelastic.spectral import mode_set

SMALL = {"m": 4, "dt": 1e-4, "t_end": 2e-3, "cadence": 4,
         "density": {"kind": "regularized", "alpha": 2.0, "epsilon": 0.25},
         "initial": {"kind": "stream", "amplitude": 0.1}}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_parse_minimal_config(tmp_path):
    cfg = parse_config(write(tmp_path, {"m": 8, "dt": 1e-4, "t_end": 0.1,
                                        "density": {"kind": "constant", "constant_value": 1.0}}))
    assert cfg.m == 8 and cfg.scheme == "rk4" and cfg.initial == {"kind": "taylor-green"}


@pytest.mark.parametrize("data, needle", [
    ({"density": {"kind": "vacuum", "alpha": 1.0}}, "alpha"),
    ({"m": 8, "dt": 1.0}, "stability bound"),
    ({"initial": {"kind": "stream", "delta": 0.5}, "density": SMALL["density"]}, "delta"),
])
def test_parse_rejects(tmp_path, data, needle):
    with pytest.raises(ConfigInvalid, match=needle):
        parse_config(write(tmp_path, data))


def test_parse_bad_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        parse_config(str(bad))
    with pytest.raises(ConfigInvalid):
        parse_config(str(tmp_path / "missing.json"))


def test_shipped_configs_parse():
    names = shipped_configs()
    assert {"taylor_green", "smooth_stream", "vacuum_regularized"} <= set(names)
    for name in names:
        parse_config(name)


def test_taylor_green_command(tmp_path, capsys):
    assert main(["taylor-green", "--out", str(tmp_path), "--cadence", "100"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["taylor_green"]["relative_l2_error"] < 1e-6
    assert summary["config"]["cadence"] == 100 and summary["steps"] == 1000
    assert "relative_l2_error" in capsys.readouterr().out


def test_run_writes_artifacts_deterministically(tmp_path):
    cfg = write(tmp_path, SMALL)
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["run", "--config", cfg, "--out", str(out), "--seed", "7"]) == 0
        outs.append(out)
    for name in ("diagnostics.csv", "monitors.csv"):
        a, b = (o / name for o in outs)
        assert a.read_bytes() == b.read_bytes()
        assert b"\r" not in a.read_bytes()
    header = (outs[0] / "diagnostics.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == COLUMNS
    assert tuple((outs[0] / "monitors.csv").read_text().splitlines()[0].split(",")) == MONITOR_COLUMNS
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["config"]["seed"] == 7
    assert summary["config"]["steps"] == summary["steps"] == 20
    assert {"wall_time", "final", "initial"} <= set(summary)


def test_run_without_epsilon_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, dict(SMALL, density={"kind": "vacuum", "alpha": 2.0}))
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "epsilon" in capsys.readouterr().err


def test_blowup_exits_3_with_partial_artifacts(tmp_path):
    cfg = write(tmp_path, dict(SMALL, initial={"kind": "taylor-green", "amplitude": 1e9}))
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] is False and "H1" in summary["failure"]
    assert len((out / "diagnostics.csv").read_text().splitlines()) == 2


def test_dump_pressure_matrix(tmp_path):
    path = tmp_path / "p.bin"
    assert main(["run", "--config", write(tmp_path, SMALL), "--out", str(tmp_path),
                 "--dump-pressure-matrix", str(path)]) == 0
    n = len(mode_set(4)) - 1
    mat = np.fromfile(path, dtype="<f8").reshape(n, n)
    assert np.all(np.diag(mat) < 0)


def test_hardy_command(tmp_path):
    assert main(["hardy", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "hardy.csv").read_text().splitlines()
    assert lines[0] == "k,epsilon,family,ratio"
    assert len(lines) == 1 + 15 * 8


def test_verify_profile_command(tmp_path):
    assert main(["verify-profile", "--out", str(tmp_path), "--epsilon", "0.125", "--epsilon", "0.25"]) == 0
    data = json.loads((tmp_path / "profile_report.json").read_text())
    assert [r["eps"] for r in data["reports"]] == [0.125, 0.25]


def test_sweep_and_probe_commands(tmp_path):
    cfg = write(tmp_path, dict(SMALL, m=6))
    assert main(["vacuum-sweep", "--config", cfg, "--out", str(tmp_path / "s"), "--j0", "2", "--j1", "3"]) == 0
    assert (tmp_path / "s" / "pairwise.csv").read_text().startswith("j,sup_diff,grad_diff_integral\n")
    assert (tmp_path / "s" / "sweep.csv").read_text().startswith("epsilon,quantity,max_over_t\n")
    assert main(["vacuum-sweep", "--config", cfg, "--out", str(tmp_path), "--j1", "6"]) == 2
    assert main(["stability-probe", "--config", cfg, "--out", str(tmp_path / "p"), "--eta", "1e-5"]) == 0
    assert json.loads((tmp_path / "p" / "summary.json").read_text())["bound_ok"] is True


def test_missing_config_exit_2(tmp_path):
    assert main(["run", "--out", str(tmp_path)]) == 2
