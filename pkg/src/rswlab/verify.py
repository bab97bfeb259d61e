"""Property suites behind the `verify` CLI subcommand.

Each suite runs the invariant checks of one module family at desk scale and
returns named pass/fail results; the CLI exits non-zero when any check
fails.  These are the same properties the pytest suite pins, packaged for a
quick standalone audit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diagnostics, planar, radial, separated
from .model import RadialGrid, ScenarioConfig, Scheme, build_initial_radial


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _check(name, passed, detail=""):
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def suite_separated():
    out = []
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(12):
        xi0, eta0 = rng.uniform(-3, 3, size=2)
        if abs(separated.theta(xi0, eta0)) < 0.05:
            continue
        traj = separated.trace(0.0, xi0, eta0, 2 * math.pi, tol=1e-10)
        k0 = traj.regime.kappa0
        drift = float(np.max(np.abs(traj.kappa_drift))) / (1 + abs(k0))
        worst = max(worst, drift)
    out.append(_check("kappa-drift", worst <= 1e-8, "max %.2e" % worst))

    closure = 0.0
    range_err = 0.0
    for k0 in (0.25, 0.5, 0.75):
        lo, hi = separated.theta_bounds(k0)
        xi0, eta0 = separated.initial_from_kappa(k0)
        traj = separated.trace(0.0, xi0, eta0, 2 * math.pi, tol=1e-10)
        closure = max(closure, float(np.hypot(traj.xi[-1] - xi0, traj.eta[-1] - eta0)))
        half = separated.trace(0.0, xi0, eta0, math.pi, tol=1e-10)
        range_err = max(range_err, abs(half.theta[-1] - hi), abs(half.theta[0] - lo))
    out.append(_check("period-closure", closure <= 1e-6, "max %.2e" % closure))
    out.append(_check("theta-range", range_err <= 1e-6, "max %.2e" % range_err))

    per = max(abs(separated.period_integral(k) - math.pi)
              for k in np.linspace(0.05, 0.95, 20, endpoint=True))
    out.append(_check("period-integral", per <= 1e-8, "max |.-pi| %.2e" % per))

    worst_rel = 0.0
    for k0 in (0.0, -0.5, -1.0, -3.0):
        for xi0 in (0.8, -0.8):
            xi, eta = separated.initial_from_kappa(k0, xi0)
            tq = separated.blowup_time_quadrature(xi, eta)
            te = separated.escape_time_ode(xi, eta)
            worst_rel = max(worst_rel, abs(tq - te) / tq)
    out.append(_check("blowup-time-consistency", worst_rel <= 1e-4,
                      "max rel %.2e" % worst_rel))

    traj = separated.trace(0.0, 0.0, 1.0, 2.0, tol=1e-10)
    sel = np.abs(traj.xi) <= 1e3
    tan = np.tan(traj.t[sel])
    tan_err = float(np.max(np.abs(traj.xi[sel] - tan) / (1.0 + np.abs(tan))))
    out.append(_check("explicit-tan", tan_err <= 1e-6, "max rel %.2e" % tan_err))

    # corrected rate checks: kappa0 = 0 satisfies 2 theta sin^2(delta/2) = 1,
    # kappa0 = -3 has a two-sided theta*(t0-t) constant
    traj0 = separated.trace(0.0, 0.0, 0.5, 4.0, tol=1e-10)
    rep0 = separated.blowup_rates(traj0)
    q_err = float(np.max(np.abs(rep0.theta_rate_quadratic - 1.0)))
    out.append(_check("blowup-rate-quadratic", q_err <= 1e-2, "max %.2e" % q_err))
    xi, eta = separated.initial_from_kappa(-3.0, 0.8)
    rep3 = separated.blowup_rates(separated.trace(0.0, xi, eta, 10.0, tol=1e-10))
    ratio = float(np.max(rep3.theta_rate) / np.min(rep3.theta_rate))
    out.append(_check("blowup-rate-two-sided", ratio <= 1.1, "ratio %.4f" % ratio))
    return out


def suite_moments():
    out = []
    ms0 = diagnostics.MomentSet.from_values(0.0, 0.0, 1.0, 0.5)
    P1, P2 = diagnostics.moment_forecast(ms0, math.pi / 2)
    out.append(_check("forecast-quarter-turn",
                      abs(P1 - 1.0) < 1e-12 and abs(P2 + 1.0) < 1e-12,
                      "(%.3g, %.3g)" % (P1, P2)))

    from .model import PlanarGrid, build_initial_planar
    grid = PlanarGrid(nx=96, ny=96, x_half=2.4, y_half=2.4)
    rest = build_initial_planar({"profile": "rest"}, grid, 1.0)
    ms = diagnostics.moments_planar(rest)
    crit = diagnostics.moment_criterion(ms, 0.0, 1.0, 1.0)
    out.append(_check("criterion-rest", (not crit.holds) and crit.margin == 0.0,
                      "margin %.3g" % crit.margin))

    swirl = build_initial_planar(
        {"profile": "swirl_bump", "cx": 0.35, "cy": 0.25, "width": 0.8,
         "h_amp": 0.15, "omega": 0.4}, grid, 1.0)
    try:
        lam = diagnostics.criterion_threshold(swirl, R=1.23)
        out.append(_check("criterion-threshold", 1.0 < lam < 1e6,
                          "lambda* %.4f" % lam))
    except (ValueError, RuntimeError) as exc:
        out.append(_check("criterion-threshold", False, str(exc)))
    return out


def suite_solver():
    out = []
    grid = RadialGrid(n=128, r_max=2.0)
    state = build_initial_radial({"profile": "rest"}, grid, 1.0)
    new, _, _ = radial.step(state, Scheme())
    fixed = (np.array_equal(new.h, state.h) and np.array_equal(new.U, state.U)
             and np.array_equal(new.V, state.V))
    out.append(_check("rest-fixed-point-radial", fixed))

    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "h_bump", "center": 1.0, "width": 0.25, "amp": 0.1},
        grid={"n": 1024, "r_max": 3.0}, h_bar=1.0, horizon=0.4,
        store_states=True, store_every=8)
    rec = radial.run(cfg)
    mass_drift = max(row["drifts"]["mass_rel"] for row in rec.rows)
    out.append(_check("mass-conservation", mass_drift <= 1e-11,
                      "max rel drift %.2e" % mass_drift))
    track = diagnostics.support_tracker(rec.states, threshold=1e-3 * 0.1)
    out.append(_check("support-cone", track["slope"] <= 1.05 + 2 * 3.0 / 1024 / 0.2,
                      "slope %.4f" % track["slope"]))
    return out


def suite_lagrangian():
    out = []
    drifts = []
    for n in (256, 512):
        cfg = ScenarioConfig(
            kind="radial",
            initial={"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                     "u_amp": 0.3, "v_amp": 0.2},
            grid={"n": n, "r_max": 2.5}, h_bar=1.0, horizon=0.25,
            store_states=True, store_every=2)
        rec = radial.run(cfg)
        probe = radial.lagrangian_probe(rec.states, np.linspace(0.6, 0.9, 10))
        drifts.append((float(np.max(probe["angular_drift"])),
                       float(np.max(probe["mass_drift"]))))
    ang_ratio = drifts[0][0] / max(drifts[1][0], 1e-300)
    mass_ratio = drifts[0][1] / max(drifts[1][1], 1e-300)
    out.append(_check("angular-invariant-refinement", ang_ratio >= 2.0,
                      "ratio %.2f" % ang_ratio))
    out.append(_check("mass-invariant-refinement", mass_ratio >= 2.0,
                      "ratio %.2f" % mass_ratio))
    return out


SUITES = {
    "separated": suite_separated,
    "moments": suite_moments,
    "solver": suite_solver,
    "lagrangian": suite_lagrangian,
}


def run_suites(names=None):
    names = list(names) if names else list(SUITES)
    results = {}
    for name in names:
        if name not in SUITES:
            raise KeyError("unknown suite %r (choose from %s)"
                           % (name, ", ".join(SUITES)))
        results[name] = [c.to_dict() for c in SUITES[name]()]
    all_pass = all(c["passed"] for cs in results.values() for c in cs)
    return {"suites": results, "all_pass": all_pass}
