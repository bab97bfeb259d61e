"""Acceptance sweep: every shipped guarantee at its pinned tolerance.

Each check prints one PASS/FAIL line (run with -s to see them).  Criterion
5b is expected to fail: the stated target for theta * (t0 - t) on the
kappa0 = 0 branch contradicts the explicit half-angle tangent solution that
criterion 6 pins (the product grows like sqrt(2 theta)); the exact form of
that rate statement is asserted in criterion 5c.
"""
import contextlib
import math

import numpy as np
import pytest

from rswlab import diagnostics, planar, radial, separated
from rswlab.model import (PlanarGrid, RadialGrid, RadialState, ScenarioConfig,
                          Scheme, build_initial_planar, build_initial_radial)


@contextlib.contextmanager
def criterion(num, label):
    try:
        yield
    except BaseException:
        print("[acceptance] criterion %s FAIL  %s" % (num, label))
        raise
    print("[acceptance] criterion %s PASS  %s" % (num, label))


# ---------------------------------------------------------------------------
# shared planar moment run (criteria 7 and 8)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def swirl_moment_run():
    cfg = ScenarioConfig(
        kind="planar",
        initial={"profile": "swirl_bump", "cx": 0.35, "cy": 0.25, "width": 0.8,
                 "h_amp": 0.15, "omega": 0.4},
        grid={"nx": 128, "ny": 128, "x_half": 2.4, "y_half": 2.4},
        h_bar=1.0, horizon=1.0, output_interval=0.02)
    return planar.run2d(cfg)


def test_c01_kappa_invariance_random_points():
    with criterion("01", "kappa invariance on 50 random points"):
        rng = np.random.default_rng(20240817)
        checked = 0
        worst = 0.0
        while checked < 50:
            xi0, eta0 = rng.uniform(-3.0, 3.0, size=2)
            if abs(separated.theta(xi0, eta0)) < 1e-6:
                continue  # the invariant is undefined on the tangent branch
            checked += 1
            traj = separated.trace(0.0, xi0, eta0, 2 * math.pi, tol=1e-10)
            drift = float(np.max(np.abs(traj.kappa_drift)))
            bound = 1e-8 * (1.0 + abs(traj.regime.kappa0))
            worst = max(worst, drift / bound)
            assert drift <= bound
        assert checked == 50 and worst <= 1.0


def test_c02_periodicity_and_theta_range():
    with criterion("02", "2*pi closure and theta range for three orbits"):
        for k0 in (0.25, 0.5, 0.75):
            lo, hi = separated.theta_bounds(k0)
            xi0, eta0 = separated.initial_from_kappa(k0)  # starts at theta = lo
            full = separated.trace(0.0, xi0, eta0, 2 * math.pi, tol=1e-10)
            end = full.sol.y_end
            assert math.hypot(end[1] - xi0, end[2] - eta0) <= 1e-6
            half = separated.trace(0.0, xi0, eta0, math.pi, tol=1e-10)
            assert abs(half.theta[0] - lo) <= 1e-6
            assert abs(half.theta[-1] - hi) <= 1e-6
            assert np.min(full.theta) >= lo - 1e-6
            assert np.max(full.theta) <= hi + 1e-6


def test_c03_period_integral_is_pi():
    with criterion("03", "travel-time integral equals pi across (0.05, 0.95)"):
        for k0 in np.linspace(0.06, 0.94, 20):
            assert abs(separated.period_integral(float(k0)) - math.pi) <= 1e-8


def test_c04_blowup_time_consistency():
    with criterion("04", "quadrature vs ODE blowup times"):
        for k0 in (0.0, -0.5, -1.0, -3.0):
            for xi0 in (0.8, -0.8):
                xi, eta = separated.initial_from_kappa(k0, xi0)
                tq = separated.blowup_time_quadrature(xi, eta)
                te = separated.escape_time_ode(xi, eta)
                assert abs(tq - te) <= 1e-4 * tq
        assert separated.blowup_time_quadrature(0.0, 1.0) == pytest.approx(
            math.pi / 2.0, abs=1e-6)
        assert separated.blowup_time_quadrature(0.0, 0.5) == pytest.approx(
            math.pi, abs=1e-6)


def test_c05a_blowup_rate_two_sided_kappa_negative():
    with criterion("05a", "theta*(t0-t) two-sided constant at kappa0 = -3"):
        xi0, eta0 = separated.initial_from_kappa(-3.0, 0.8)
        traj = separated.trace(0.0, xi0, eta0, 10.0, tol=1e-10)
        rep = separated.blowup_rates(traj)
        ratio = float(np.max(rep.theta_rate) / np.min(rep.theta_rate))
        assert ratio <= 1.1


def test_c05b_blowup_rate_product_kappa_zero_as_stated():
    # Stated target: theta(t) * (t0 - t) in [0.99, 1.01] over the last
    # sampled decade of the kappa0 = 0 run.  The explicit half-angle
    # solution pinned by criterion 6 gives theta = (1/2) sec^2((t+C)/2), so
    # theta * (t0 - t) = 2 theta arcsin(1/sqrt(2 theta)) ~ sqrt(2 theta),
    # which diverges as t -> t0.  The assertion is kept as stated and is
    # expected to fail; criterion 5c asserts the exact form of the rate.
    with criterion("05b", "theta*(t0-t) -> 1 at kappa0 = 0 (as stated)"):
        traj = separated.trace(0.0, 0.0, 0.5, 4.0, tol=1e-10)
        rep = separated.blowup_rates(traj)
        assert np.all(rep.theta_rate >= 0.99)
        assert np.all(rep.theta_rate <= 1.01)


def test_c05c_blowup_rate_kappa_zero_exact_identity():
    with criterion("05c", "2*theta*sin^2((t0-t)/2) = 1 at kappa0 = 0"):
        traj = separated.trace(0.0, 0.0, 0.5, 4.0, tol=1e-10)
        rep = separated.blowup_rates(traj)
        assert np.all(rep.theta_rate_quadratic >= 0.99)
        assert np.all(rep.theta_rate_quadratic <= 1.01)


def test_c06_explicit_solutions():
    with criterion("06", "tangent-branch and kappa0 = 0 closed forms"):
        traj = separated.trace(0.0, 0.0, 1.0, 2.0, tol=1e-12)
        sel = np.abs(traj.xi) <= 1e3
        tan = np.tan(traj.t[sel])
        sec2 = 1.0 + tan * tan
        assert np.max(np.abs(traj.xi[sel] - tan) / (1 + np.abs(tan))) <= 1e-6
        assert np.max(np.abs(traj.eta[sel] - sec2) / (1 + sec2)) <= 1e-6

        half = separated.trace(0.0, 0.0, 0.5, 4.0, tol=1e-12)
        sel = np.abs(half.xi) <= 1e3
        tan = np.tan(0.5 * half.t[sel])
        sec2 = 0.5 * (1.0 + tan * tan)
        assert np.max(np.abs(half.xi[sel] - tan) / (1 + np.abs(tan))) <= 1e-6
        assert np.max(np.abs(half.eta[sel] - sec2) / (1 + sec2)) <= 1e-6


def test_c07_moment_ode_residuals(swirl_moment_run):
    with criterion("07", "planar moment system residuals at 128^2"):
        rec = swirl_moment_run
        assert rec.termination == "horizon"
        t = rec.times
        P1 = rec.moment_series("P1")
        P2 = rec.moment_series("P2")
        E = rec.moment_series("E")
        ms0 = rec.rows[0]["moments"]
        scale = abs(ms0.E) + abs(ms0.P1) + abs(ms0.P2)
        dP1 = np.gradient(P1, t, edge_order=2)
        dP2 = np.gradient(P2, t, edge_order=2)
        assert np.max(np.abs(dP1 - (E + P2))) <= 1e-2 * scale
        assert np.max(np.abs(dP2 + P1)) <= 1e-2 * scale
        assert max(r["drifts"]["mass_rel"] for r in rec.rows) <= 1e-3


def test_c08_moment_forecast(swirl_moment_run):
    with criterion("08", "closed-form moment forecast matches the run"):
        rec = swirl_moment_run
        ms0 = rec.rows[0]["moments"]
        scale = abs(ms0.E) + abs(ms0.P1) + abs(ms0.P2)
        t = rec.times
        P1f, P2f = diagnostics.moment_forecast(ms0, t)
        assert np.max(np.abs(rec.moment_series("P1") - P1f)) <= 1e-2 * scale
        assert np.max(np.abs(rec.moment_series("P2") - P2f)) <= 1e-2 * scale


def test_c09_support_cone():
    with criterion("09", "support radius grows no faster than sqrt(h_bar)"):
        for h_bar, r_max, horizon in ((1.0, 3.2, 0.5), (4.0, 4.2, 0.35)):
            amp = 0.1 * h_bar
            n = 2048
            cfg = ScenarioConfig(
                kind="radial",
                initial={"profile": "h_bump", "center": 1.0, "width": 0.25,
                         "amp": amp},
                grid={"n": n, "r_max": r_max}, h_bar=h_bar, horizon=horizon,
                store_states=True, store_every=16)
            rec = radial.run(cfg)
            track = diagnostics.support_tracker(rec.states)  # default 1e-8 amp
            # slope is fitted over the second half of the series; allow the
            # radius quantization of one cell at each end of that window
            dr = r_max / n
            grid_term = 2.0 * dr / (0.5 * horizon)
            assert track["slope"] <= math.sqrt(h_bar) * 1.05 + grid_term


def test_c10_rest_states_are_exact_fixed_points():
    with criterion("10", "rest states are bit-exact fixed points"):
        rs = build_initial_radial({"profile": "rest"},
                                  RadialGrid(n=256, r_max=3.0), 1.0)
        new, _, _ = radial.step(rs, Scheme())
        assert np.array_equal(new.h, rs.h)
        assert np.array_equal(new.U, rs.U)
        assert np.array_equal(new.V, rs.V)
        ps = build_initial_planar({"profile": "rest"},
                                  PlanarGrid(nx=96, ny=96, x_half=2.0,
                                             y_half=2.0), 1.0)
        pnew, _ = planar.step2d(ps, Scheme())
        assert np.array_equal(pnew.h, ps.h)
        assert np.array_equal(pnew.hu, ps.hu)
        assert np.array_equal(pnew.hv, ps.hv)


def test_c11_solver_converges_to_separated_solution():
    with criterion("11", "second-order convergence to the separated orbit"):
        traj = separated.trace(0.0, 0.5, 0.25, 1.2, tol=1e-12)  # kappa0 = 0.75

        def exact(t, r):
            g, xi, eta = traj.sol.sample(t)[:3]
            return separated.reconstruct_fields((g, xi, eta), np.asarray(r))

        horizon = 1.0
        errs = []
        for n in (64, 128, 256):
            grid = RadialGrid(n=n, r_max=1.5, r_min=0.5)
            r = grid.centers()
            h, U, V = exact(0.0, r)
            state = RadialState(r=r, h=h, U=U, V=V, h_bar=1.0)
            scheme = Scheme(order=2)
            bc = radial.RadialBC(inner="trace", outer="trace",
                                 trace=lambda t, rg: exact(t, rg))
            t = 0.0
            while t < horizon - 1e-14:
                dt = min(radial.cfl_dt(state, scheme), horizon - t)
                state, dt, _ = radial.step(state, scheme, bc, dt)
                t = state.t
            he, Ue, Ve = exact(horizon, r)
            errs.append(math.sqrt(float(np.sum(
                (state.h - he) ** 2 + (state.U - Ue) ** 2
                + (state.V - Ve) ** 2) * grid.dr)))
        orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        for p in orders:
            assert abs(p - 2.0) <= 0.3


def test_c12_lagrangian_invariants_shrink_at_scheme_order():
    with criterion("12", "path invariants shrink at scheme order"):
        drifts = []
        for n in (256, 512, 1024):
            cfg = ScenarioConfig(
                kind="radial",
                initial={"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                         "u_amp": 0.3, "v_amp": 0.2},
                grid={"n": n, "r_max": 2.5}, h_bar=1.0, horizon=0.25,
                store_states=True, store_every=2)
            rec = radial.run(cfg)
            assert rec.termination == "horizon"
            probe = radial.lagrangian_probe(rec.states, np.linspace(0.6, 0.9, 10))
            drifts.append((float(np.max(probe["angular_drift"])),
                           float(np.max(probe["mass_drift"]))))
        for component in (0, 1):
            seq = [d[component] for d in drifts]
            assert seq[0] > seq[1] > seq[2]
            for a, b in zip(seq, seq[1:]):
                assert math.log2(a / b) >= 1.7  # formal order 2 minus 0.3


def test_c13_moment_criterion_mechanics():
    with criterion("13", "rest margin and amplitude-scaling threshold"):
        rest = build_initial_planar({"profile": "rest"},
                                    PlanarGrid(nx=64, ny=64, x_half=2.0,
                                               y_half=2.0), 1.0)
        msr = diagnostics.moments_planar(rest)
        res = diagnostics.moment_criterion(msr, R=0.0, h_bar=1.0, h0_sup=1.0)
        assert not res.holds
        assert res.margin == 0.0
        assert not res.mass_positive

        swirl = build_initial_planar(
            {"profile": "swirl_bump", "cx": 0.35, "cy": 0.25, "width": 0.8,
             "h_amp": 0.15, "omega": 0.4},
            PlanarGrid(nx=128, ny=128, x_half=2.4, y_half=2.4), 1.0)
        R = math.hypot(0.35, 0.25) + 0.8
        lam = diagnostics.criterion_threshold(swirl, R, tol=1e-3)
        assert math.isfinite(lam) and lam > 1.0

        def margin(l):
            s = diagnostics.scale_family(swirl, l, "amplitude")
            ms = diagnostics.moments_planar(s)
            return diagnostics.moment_criterion(
                ms, R, s.h_bar, float(np.max(s.h))).margin

        assert margin(lam - 1e-3) < 0.0 <= margin(lam + 1e-3)


def test_c14_inward_bump_blowup_is_qualitative():
    # the lifespan-bound constants are not reproducible by design; this
    # checks detection ordering plus the monitored growth inequality
    with criterion("14", "inward-bump family: detection and growth monitor"):
        results = {}
        for amp in (1.0, 5.0, 20.0):
            cfg = ScenarioConfig(
                kind="radial",
                initial={"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                         "u_amp": amp},
                grid={"n": 800, "r_max": 3.0}, h_bar=1.0, horizon=0.15,
                store_states=(amp == 20.0), store_every=1)
            results[amp] = radial.run(cfg)
        assert results[20.0].termination == "blowup-detected"
        assert results[1.0].termination == "horizon"

        rec = results[20.0]
        t_det = rec.blowup["time"]
        T_vals = np.linspace(0.25 * t_det, 0.95 * t_det, 12)
        rep = diagnostics.weighted_momentum_report(rec.states, 1.0, T_vals)
        assert not rep.inapplicable
        assert rep.alpha > 0.0
        assert np.all(rep.monitored_ok)
