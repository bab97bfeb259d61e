"""Command-line entry point.

Subcommands:
  separated   classify / integrate the separated-variable reduction
  run         execute a radial or planar scenario from a config file
  verify      run the property suites and exit non-zero on any failure

Exit codes: 0 success (expected blowup detection included), 1 verification
failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics, io, planar, radial, separated, verify
from .model import ConfigError, ScenarioConfig, validate_config

USAGE_ERROR = 2
VERIFY_FAIL = 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code) if exc.code else 0
    if not hasattr(args, "func"):
        parser.print_help()
        return USAGE_ERROR
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print("config error:", e, file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print("error:", exc, file=sys.stderr)
        return USAGE_ERROR


def _build_parser():
    p = argparse.ArgumentParser(prog="rswlab")
    sub = p.add_subparsers(dest="command")

    ps = sub.add_parser("separated", help="separated-variable reduction runs")
    ps.add_argument("--g0", type=float, default=0.0)
    ps.add_argument("--xi0", type=float, default=0.0)
    ps.add_argument("--eta0", type=float, default=0.0)
    ps.add_argument("--horizon", type=float, default=2.0 * math.pi)
    ps.add_argument("--tol", type=float, default=1e-10)
    ps.add_argument("--sweep", type=str, default=None,
                    help="kappa0=lo:hi:count sweep of periodic starts")
    ps.add_argument("--workers", type=int, default=1,
                    help="fan a sweep out over a process pool")
    ps.add_argument("--out", type=str, default=None,
                    help="output directory (default: no files, print only)")
    ps.set_defaults(func=cmd_separated)

    pr = sub.add_parser("run", help="radial / planar scenario runs")
    pr.add_argument("config", type=str, help="path to a scenario config JSON")
    pr.add_argument("--out", type=str, default="runs/latest")
    pr.add_argument("--horizon", type=float, default=None)
    pr.add_argument("--cfl", type=float, default=None)
    pr.add_argument("--order", type=int, default=None)
    pr.add_argument("--snapshots", type=int, default=0,
                    help="number of snapshot CSVs to write")
    pr.set_defaults(func=cmd_run)

    pv = sub.add_parser("verify", help="run property suites")
    pv.add_argument("--suite", type=str, default=None,
                    choices=sorted(verify.SUITES), help="restrict to one suite")
    pv.add_argument("--json", dest="json_out", type=str, default=None)
    pv.set_defaults(func=cmd_verify)
    return p


# ---------------------------------------------------------------------------

def _sweep_values(expr: str):
    try:
        name, rng = expr.split("=")
        lo, hi, count = rng.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ValueError("bad sweep %r (want kappa0=lo:hi:count)" % expr) from exc
    if name != "kappa0":
        raise ValueError("only kappa0 sweeps are supported")
    return np.linspace(lo, hi, count)


def _trace_one(job):
    g0, xi0, eta0, horizon, tol = job
    traj = separated.trace(g0, xi0, eta0, horizon, tol)
    closure = None
    if traj.regime.tag == separated.PERIODIC and horizon >= traj.regime.period:
        end = traj.sol.sample(traj.regime.period)
        closure = float(np.hypot(end[1] - xi0, end[2] - eta0))
    return traj, closure


def cmd_separated(args) -> int:
    jobs = []
    if args.sweep:
        for k0 in _sweep_values(args.sweep):
            xi0, eta0 = separated.initial_from_kappa(float(k0))
            jobs.append((args.g0, xi0, eta0, args.horizon, args.tol))
    else:
        jobs.append((args.g0, args.xi0, args.eta0, args.horizon, args.tol))

    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_trace_one, jobs))
    else:
        results = [_trace_one(job) for job in jobs]

    for i, (job, (traj, closure)) in enumerate(zip(jobs, results)):
        reg = traj.regime
        parts = ["regime=%s" % reg.tag]
        if reg.kappa0 is not None:
            parts.append("kappa0=%.10g" % reg.kappa0)
        if reg.t_blowup is not None:
            parts.append("t0=%.10g" % reg.t_blowup)
        if reg.period is not None:
            parts.append("period=%.10g" % reg.period)
        if closure is not None:
            parts.append("closure=%.3e" % closure)
        if traj.truncated:
            parts.append("truncated_at=%.10g" % traj.sol.t_end)
        print(" ".join(parts))
        if out_dir:
            stem = "trajectory" if len(jobs) == 1 else "trajectory_%03d" % i
            io.write_trajectory_csv(out_dir / (stem + ".csv"), traj)
            io.write_phase_portrait_csv(
                out_dir / (stem.replace("trajectory", "phase") + ".csv"), traj)
            payload = {"regime": reg.to_dict(), "initial": {
                "g0": job[0], "xi0": job[1], "eta0": job[2]}}
            if closure is not None:
                payload["closure"] = closure
            if reg.tag in (separated.BLOWUP, separated.EXPLICIT_TAN):
                rep = separated.blowup_rates(traj)
                payload["blowup_report"] = {
                    "t0": rep.t0, "rate_h": rep.rate_h, "rate_U2": rep.rate_U2,
                    "rate_V2": rep.rate_V2, "exp_h": rep.exp_h,
                    "exp_U2": rep.exp_U2, "exp_V2": rep.exp_V2,
                }
            io.write_json(out_dir / (stem.replace("trajectory", "regime") + ".json"),
                          payload)
    return 0


def cmd_run(args) -> int:
    cfg = ScenarioConfig.from_json(Path(args.config).read_text())
    overrides = {}
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    d = cfg.to_dict()
    d.update(overrides)
    if args.cfl is not None:
        d["solver"]["cfl"] = args.cfl
    if args.order is not None:
        d["solver"]["order"] = args.order
    if args.snapshots:
        d["output"]["store_states"] = True
    cfg = validate_config(ScenarioConfig.from_dict(d))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(cfg.to_json(indent=2))

    if cfg.kind == "radial":
        record = radial.run(cfg)
    elif cfg.kind == "planar":
        record = planar.run2d(cfg)
    else:
        print("error: cmd_run handles radial and planar scenarios", file=sys.stderr)
        return USAGE_ERROR
    record.check()

    io.write_record_jsonl(out_dir / "record.jsonl", record)
    if args.snapshots and record.states:
        snap_dir = out_dir / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        idx = np.unique(np.linspace(0, len(record.states) - 1,
                                    args.snapshots).astype(int))
        for k in idx:
            s = record.states[k]
            name = "state_%05d.csv" % k
            if cfg.kind == "radial":
                io.write_radial_snapshot(snap_dir / name, s)
            else:
                io.write_planar_snapshot(snap_dir / name, s)

    ms0 = record.rows[0]["moments"]
    times = record.times
    P1f, P2f = diagnostics.moment_forecast(ms0, times)
    res1 = max(abs(row["moments"].P1 - f) for row, f in zip(record.rows, P1f))
    res2 = max(abs(row["moments"].P2 - f) for row, f in zip(record.rows, P2f))
    summary = {
        "termination": record.termination,
        "blowup": record.blowup,
        "t_end": times[-1],
        "forecast_residuals": {"P1": res1, "P2": res2},
        "moment_ode_residuals": _moment_ode_residuals(record),
        "criterion": _criterion_summary(cfg, record),
        "drifts_final": record.rows[-1]["drifts"],
    }
    io.write_json(out_dir / "summary.json", summary)
    print("termination=%s t_end=%.6g out=%s"
          % (record.termination, times[-1], out_dir))
    return 0


def _moment_ode_residuals(record):
    """Finite-differenced residuals of P1' = E + P2, P2' = -P1 over the
    output rows, normalized by the initial moment scale."""
    if len(record.rows) < 3:
        return None
    t = record.times
    P1 = record.moment_series("P1")
    P2 = record.moment_series("P2")
    E = record.moment_series("E")
    ms0 = record.rows[0]["moments"]
    scale = abs(ms0.E) + abs(ms0.P1) + abs(ms0.P2)
    dP1 = np.gradient(P1, t, edge_order=2)
    dP2 = np.gradient(P2, t, edge_order=2)
    return {
        "P1": float(np.max(np.abs(dP1 - (E + P2)))),
        "P2": float(np.max(np.abs(dP2 + P1))),
        "scale": scale,
    }


def _criterion_summary(cfg, record):
    from .model import support_radius
    R = support_radius(cfg.kind, cfg.initial)
    if not math.isfinite(R):
        return None
    ms0 = record.rows[0]["moments"]
    amp = float(cfg.initial.get("amp", cfg.initial.get("h_amp", 0.0)))
    h0_sup = cfg.h_bar + max(amp, 0.0)  # bump profiles peak at h_bar + amp
    res = diagnostics.moment_criterion(ms0, R, cfg.h_bar, h0_sup)
    return {"holds": res.holds, "margin": res.margin, "lhs": res.lhs,
            "rhs": res.rhs, "mass_positive": res.mass_positive}


def cmd_verify(args) -> int:
    names = [args.suite] if args.suite else None
    result = verify.run_suites(names)
    for suite, checks in result["suites"].items():
        for c in checks:
            print("[%s] %-32s %s %s"
                  % (suite, c["name"], "PASS" if c["passed"] else "FAIL",
                     c["detail"]))
    if args.json_out:
        io.write_json(args.json_out, result)
    return 0 if result["all_pass"] else VERIFY_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
