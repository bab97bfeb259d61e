import json
import math
import numpy as np
import pytest

from rswlab import io
from rswlab.cli import main
from rswlab.model import ScenarioConfig, validate_config
from rswlab.separated import trace


def run_cli(*args, capsys=None):
    code = main(list(args))
    out = capsys.readouterr() if capsys else None
    return code, out


def test_separated_equilibrium(capsys):
    code, out = run_cli("separated", "--xi0", "0", "--eta0", "0", capsys=capsys)
    assert code == 0
    assert "equilibrium" in out.out
    assert "kappa0=1" in out.out


def test_separated_blowup_prints_finite_time(capsys):
    code, out = run_cli("separated", "--xi0", "0", "--eta0", "2", capsys=capsys)
    assert code == 0
    assert "blowup" in out.out and "kappa0=-3" in out.out
    t0 = float(out.out.split("t0=")[1].split()[0])
    assert t0 == pytest.approx(math.pi / 3.0, abs=1e-6)


def test_separated_sweep_periodic_rows(capsys):
    code, out = run_cli("separated", "--sweep", "kappa0=0.1:0.9:9",
                        capsys=capsys)
    assert code == 0
    lines = [l for l in out.out.splitlines() if l.strip()]
    assert len(lines) == 9
    for line in lines:
        assert "periodic" in line
        closure = float(line.split("closure=")[1].split()[0])
        assert closure < 1e-6


def test_usage_error_exit_code():
    assert main(["separated", "--xi0", "abc"]) == 2
    assert main(["run", "/nonexistent/config.json"]) == 2
    assert main(["nonsense"]) == 2


def test_separated_writes_parseable_artifacts(tmp_path, capsys):
    code, _ = run_cli("separated", "--xi0", "2", "--eta0", "4",
                      "--out", str(tmp_path), capsys=capsys)
    assert code == 0
    cols = io.read_csv(tmp_path / "trajectory.csv")
    assert set(cols) == {"t", "g", "xi", "eta", "theta", "kappa_drift"}
    reg = json.loads((tmp_path / "regime.json").read_text())
    assert reg["regime"]["tag"] == "blowup"
    assert reg["blowup_report"]["t0"] == pytest.approx(math.pi / 6.0, abs=1e-8)
    # columns reproduce a fresh trace at matching sample times
    traj = trace(0.0, 2.0, 4.0, 2 * math.pi)
    assert np.allclose(cols["t"], traj.t)
    assert np.allclose(cols["theta"], traj.theta)


def test_run_blowup_is_exit_zero_with_cause(tmp_path):
    cfg = {
        "kind": "radial",
        "initial": {"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                    "u_amp": 20.0},
        "grid": {"n": 400, "r_max": 3.0},
        "h_bar": 1.0, "horizon": 0.15,
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    out_dir = tmp_path / "run"
    assert main(["run", str(p), "--out", str(out_dir)]) == 0
    summary = io.read_json(out_dir / "summary.json")
    assert summary["termination"] == "blowup-detected"
    assert summary["blowup"]["time"] < 0.15


def test_run_directory_layout_and_round_trip(tmp_path):
    cfg = {
        "kind": "radial",
        "initial": {"profile": "h_bump", "center": 1.0, "width": 0.25,
                    "amp": 0.1},
        "grid": {"n": 256, "r_max": 3.0},
        "h_bar": 1.0, "horizon": 0.2,
        "output": {"store_states": True, "store_every": 8},
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    out_dir = tmp_path / "run"
    assert main(["run", str(p), "--out", str(out_dir), "--snapshots", "3"]) == 0
    assert (out_dir / "config.json").exists()
    assert (out_dir / "record.jsonl").exists()
    assert (out_dir / "summary.json").exists()
    snaps = sorted((out_dir / "snapshots").glob("*.csv"))
    assert len(snaps) == 3

    # every emitted file re-parses
    rows = io.read_record_jsonl(out_dir / "record.jsonl")
    assert rows[0]["t"] == 0.0
    assert rows[-1]["moments"].m == pytest.approx(rows[0]["moments"].m, rel=1e-10)
    snap = io.read_csv(snaps[0])
    assert set(snap) == {"r", "h", "U", "V"}
    cfg_back = validate_config(
        ScenarioConfig.from_json((out_dir / "config.json").read_text()))
    assert cfg_back.to_dict() == io.read_json(out_dir / "config.json")


def test_invalid_config_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({
        "kind": "radial", "initial": {"profile": "nope"},
        "grid": {"n": 4, "r_max": -1.0}, "h_bar": 0.0}))
    code, out = run_cli("run", str(p), capsys=capsys)
    assert code == 2
    assert out.err.count("config error") >= 3


def test_run_is_deterministic(tmp_path):
    cfg = {
        "kind": "radial",
        "initial": {"profile": "h_bump", "center": 1.0, "width": 0.25,
                    "amp": 0.1},
        "grid": {"n": 128, "r_max": 3.0},
        "h_bar": 1.0, "horizon": 0.1,
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    main(["run", str(p), "--out", str(tmp_path / "a")])
    main(["run", str(p), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "record.jsonl").read_bytes() == \
        (tmp_path / "b" / "record.jsonl").read_bytes()


def test_planar_run_summary_has_moment_residuals(tmp_path):
    cfg = {
        "kind": "planar",
        "initial": {"profile": "swirl_bump", "cx": 0.2, "cy": 0.1,
                    "width": 0.6, "h_amp": 0.1, "omega": 0.3},
        "grid": {"nx": 64, "ny": 64, "x_half": 2.0, "y_half": 2.0},
        "h_bar": 1.0, "horizon": 0.5,
        "output": {"store_states": True, "store_every": 20},
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    out_dir = tmp_path / "run"
    assert main(["run", str(p), "--out", str(out_dir), "--snapshots", "2"]) == 0
    summary = io.read_json(out_dir / "summary.json")
    res = summary["moment_ode_residuals"]
    assert res["P1"] <= 5e-2 * res["scale"]
    assert res["P2"] <= 5e-2 * res["scale"]
    crit = summary["criterion"]
    assert crit["mass_positive"] and not crit["holds"]
    snaps = sorted((out_dir / "snapshots").glob("*.csv"))
    cols = io.read_csv(snaps[0])
    assert set(cols) == {"x", "y", "h", "hu", "hv"}


def test_verify_separated_suite(tmp_path, capsys):
    code, out = run_cli("verify", "--suite", "separated",
                        "--json", str(tmp_path / "v.json"), capsys=capsys)
    assert code == 0
    assert "PASS" in out.out and "FAIL" not in out.out
    payload = io.read_json(tmp_path / "v.json")
    assert payload["all_pass"] is True
    names = {c["name"] for c in payload["suites"]["separated"]}
    assert "kappa-drift" in names and "blowup-time-consistency" in names


def test_planar_snapshot_round_trip(tmp_path):
    from rswlab.model import PlanarGrid, build_initial_planar
    grid = PlanarGrid(nx=16, ny=16, x_half=1.0, y_half=1.0)
    s = build_initial_planar({"profile": "h_bump", "width": 0.4, "amp": 0.1},
                             grid, 1.0)
    io.write_planar_snapshot(tmp_path / "p.csv", s)
    cols = io.read_csv(tmp_path / "p.csv")
    assert set(cols) == {"x", "y", "h", "hu", "hv"}
    assert np.allclose(cols["h"].reshape(16, 16), s.h)
