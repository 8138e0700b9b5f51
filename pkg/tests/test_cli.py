import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from ottolab.cli import main, run, suite, validate_config
from ottolab.errors import ConfigInvalid

QUAD = {"kind": "quadratic", "dim": 1, "params": {"scale": 1.0}}


def _interp_config(**overrides):
    params = {"potential": QUAD, "x": 1.0, "y": 1.0, "eps": 1.0, "S": 256,
              "method": "direct"}
    params.update(overrides)
    return {"format_version": 1, "command": "finite-interp", "params": params}


def test_validate_rejects_unknown_fields():
    cfg = _interp_config()
    cfg["surprise"] = 1
    with pytest.raises(ConfigInvalid, match="surprise"):
        validate_config(cfg)
    cfg = _interp_config(bogus=3)
    with pytest.raises(ConfigInvalid, match="bogus"):
        validate_config(cfg)


def test_validate_ranges():
    with pytest.raises(ConfigInvalid, match="eps"):
        validate_config(_interp_config(eps=-1.0))
    with pytest.raises(ConfigInvalid, match="format_version"):
        validate_config({"command": "finite-interp", "params": {}})
    with pytest.raises(ConfigInvalid, match="command"):
        validate_config({"format_version": 1, "command": "nope", "params": {}})
    with pytest.raises(ConfigInvalid, match="S"):
        validate_config(_interp_config(S=1))
    with pytest.raises(ConfigInvalid, match="seed"):
        validate_config({**_interp_config(), "seed": "zero"})


def test_validate_rejects_malformed_potential_and_points():
    with pytest.raises(ConfigInvalid, match="potential"):
        validate_config(_interp_config(potential={"kind": "nope", "dim": 1,
                                                  "params": {}}))
    with pytest.raises(ConfigInvalid, match="potential"):
        validate_config(_interp_config(potential={"kind": "neglog", "dim": 1,
                                                  "params": {"n_param": -2.0}}))
    with pytest.raises(ConfigInvalid, match=r"params\.x"):
        validate_config(_interp_config(x=["a"]))


def test_run_finite_interp_writes_report(tmp_path):
    report = run(_interp_config(method="both", S=512), out_dir=tmp_path)
    assert report["status"] == "pass"
    # closed-form cost of the two-exponential minimizer at x = y = 1, eps = 1
    expected = (1 - math.exp(-1.0)) / (1 + math.exp(-1.0))
    assert report["results"]["direct"]["cost"] == pytest.approx(expected, rel=1e-3)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["status"] == "pass"
    csv_head = (tmp_path / "interpolation.csv").read_text().splitlines()[0]
    assert csv_head == "# format_version=1"


def test_run_grid_bridge_uniform_all_zero(tmp_path):
    cfg = {"format_version": 1, "command": "grid-bridge",
           "params": {"mu": {"kind": "uniform"}, "nu": {"kind": "uniform"},
                      "eps": 0.1, "N": 64, "S": 16}}
    report = run(cfg, out_dir=tmp_path)
    assert report["status"] == "pass"
    bundle = json.loads((tmp_path / "cost_bundle.json").read_text())
    assert abs(bundle["sch"]) <= 1e-14
    assert abs(bundle["a_ent"]) <= 1e-14


def test_cli_exit_codes(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_interp_config(S=128)))
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "ok")]) == 0

    bad = _interp_config(eps=-2.0)
    cfg_path.write_text(json.dumps(bad))
    out = tmp_path / "bad"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 1
    assert not out.exists()          # validation precedes any file writes


def test_cli_version_subprocess():
    proc = subprocess.run([sys.executable, "-m", "ottolab.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("ottolab ")


def test_cli_suite_paper_bridge_subprocess(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ottolab.cli", "suite", "paper-bridge",
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "[suite] PASS" in proc.stdout
    summary = json.loads((tmp_path / "suite.json").read_text())
    assert summary["status"] == "pass"
    assert {e["command"] for e in summary["experiments"]} == {
        "grid-bridge", "grid-contraction", "epsilon-sweep", "grid-flow"}


def test_suite_negative_control(tmp_path):
    # an injected impossible tolerance must flip the suite to check-failed
    cfg = {"format_version": 1, "command": "grid-bridge",
           "params": {"mu": {"kind": "bump", "center": 0.35, "concentration": 10.0},
                      "nu": {"kind": "bump", "center": 0.65, "concentration": 10.0},
                      "eps": 0.1, "N": 128, "S": 200}}
    good = run(cfg, out_dir=tmp_path / "a")
    assert good["status"] == "pass"
    rigged = run(cfg, out_dir=tmp_path / "b", overrides={"route_gap_rel": 1e-12})
    assert rigged["status"] == "check-failed"


def test_run_is_deterministic(tmp_path):
    cfg = _interp_config(S=128)
    run(cfg, out_dir=tmp_path / "one")
    run(cfg, out_dir=tmp_path / "two")
    for name in ("report.json", "interpolation.csv"):
        a = (tmp_path / "one" / name).read_bytes()
        b = (tmp_path / "two" / name).read_bytes()
        assert a == b


def test_epsilon_sweep_command(tmp_path):
    cfg = {"format_version": 1, "command": "epsilon-sweep",
           "params": {"mu": {"kind": "bump", "center": 0.35, "concentration": 10.0},
                      "nu": {"kind": "bump", "center": 0.65, "concentration": 10.0},
                      "N": 128, "eps_list": [0.4, 0.2, 0.1]}}
    report = run(cfg, out_dir=tmp_path)
    assert report["status"] == "pass"
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[2].startswith("# params_sha256=")
    header = [l for l in lines if not l.startswith("#")][0]
    assert header == "eps,sch,a_ent,w2sq_over_4,gap,sinkhorn_iters"


def test_grid_flow_command(tmp_path):
    cfg = {"format_version": 1, "command": "grid-flow",
           "params": {"kind": "heat", "N": 64, "t_end": 0.05, "dt": 5e-5,
                      "max_snapshots": 10}}
    report = run(cfg, out_dir=tmp_path)
    assert report["status"] == "pass"
    assert (tmp_path / "lyapunov.csv").exists()
    snaps = sorted((tmp_path / "snapshots").glob("snap_*.csv"))
    assert len(snaps) >= 10
    assert any(line.startswith("# t=") for line in snaps[1].read_text().splitlines())


def test_suite_parallel_matches_sequential(tmp_path, monkeypatch):
    def tree(root):
        return {p.relative_to(root): p.read_bytes()
                for p in sorted(Path(root).rglob("*")) if p.is_file()}

    monkeypatch.delenv("OTTOLAB_THREADS", raising=False)
    suite("paper-bridge", out_dir=tmp_path / "seq")
    monkeypatch.setenv("OTTOLAB_THREADS", "3")
    suite("paper-bridge", out_dir=tmp_path / "par")
    seq, par = tree(tmp_path / "seq"), tree(tmp_path / "par")
    assert set(seq) == set(par)
    assert all(seq[k] == par[k] for k in seq)
