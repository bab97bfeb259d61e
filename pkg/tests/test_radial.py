import math

import numpy as np
import pytest

from rswlab import diagnostics, radial, separated
from rswlab.model import RadialGrid, RadialState, ScenarioConfig, Scheme, \
    build_initial_radial


def rest_state(n=128, r_max=2.0, h_bar=1.0):
    return build_initial_radial({"profile": "rest"}, RadialGrid(n=n, r_max=r_max),
                                h_bar)


def test_characteristic_speeds():
    lam1, lam2, lam3 = radial.characteristic_speeds(1.0, 0.0)
    assert (lam1, lam2, lam3) == (-1.0, 0.0, 1.0)
    assert radial.characteristic_speeds(0.0, 3.0) == (3.0, 3.0, 3.0)
    lam1, lam2, lam3 = radial.characteristic_speeds(4.0, -1.0)
    assert (lam1, lam2, lam3) == (-3.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        radial.characteristic_speeds(-1.0, 0.0)


@pytest.mark.parametrize("flux", ["llf", "hll"])
@pytest.mark.parametrize("order", [1, 2])
def test_rest_state_is_bitwise_fixed_point(flux, order):
    state = rest_state(h_bar=2.3)
    new, dt, _ = radial.step(state, Scheme(flux=flux, order=order))
    assert np.array_equal(new.h, state.h)
    assert np.array_equal(new.U, state.U)
    assert np.array_equal(new.V, state.V)
    assert dt > 0


def test_rest_run_reports_horizon_and_zero_drift():
    cfg = ScenarioConfig(kind="radial", initial={"profile": "rest"},
                         grid={"n": 64, "r_max": 2.0}, h_bar=1.0, horizon=0.3)
    rec = radial.run(cfg).check()
    assert rec.termination == "horizon"
    for row in rec.rows:
        assert row["drifts"]["mass_rel"] == 0.0
        assert row["moments"].P1 == 0.0


def test_mass_telescopes_to_round_off():
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "h_bump", "center": 1.0, "width": 0.25, "amp": 0.1},
        grid={"n": 512, "r_max": 3.0}, h_bar=1.0, horizon=0.3)
    rec = radial.run(cfg)
    assert max(r["drifts"]["mass_rel"] for r in rec.rows) <= 1e-12


def test_depth_stays_positive_on_shipped_scenarios():
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                 "u_amp": 5.0},
        grid={"n": 400, "r_max": 3.0}, h_bar=1.0, horizon=0.1,
        store_states=True, store_every=5)
    rec = radial.run(cfg)
    assert all(np.all(s.h > 0) for s in rec.states)


def test_small_perturbation_front_speed():
    # linearized front moves at sqrt(h_bar) within 5 percent
    amp = 1e-4
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "h_bump", "center": 1.0, "width": 0.25, "amp": amp},
        grid={"n": 1024, "r_max": 3.0}, h_bar=1.0, horizon=0.5,
        store_states=True, store_every=10)
    rec = radial.run(cfg)
    track = diagnostics.support_tracker(rec.states, threshold=1e-3 * amp)
    assert track["slope"] <= 1.05 + 2 * (3.0 / 1024) / 0.25
    assert track["slope"] >= 0.75


def test_blowup_detection_fires_for_steep_inward_bump():
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "inward_bump", "r_lo": 0.5, "r_hi": 1.0,
                 "u_amp": 20.0},
        grid={"n": 800, "r_max": 3.0}, h_bar=1.0, horizon=0.15)
    rec = radial.run(cfg).check()
    assert rec.termination == "blowup-detected"
    assert rec.blowup["time"] < 0.1
    assert "radius" in rec.blowup
    # the steepening sits near the inner edge of the initial support
    assert 0.3 < rec.blowup["radius"] < 0.9


def test_first_order_convergence_against_separated_oracle():
    traj = separated.trace(0.0, 0.5, 0.25, 0.6, tol=1e-12)

    def exact(t, r):
        g, xi, eta = traj.sol.sample(t)[:3]
        return separated.reconstruct_fields((g, xi, eta), np.asarray(r))

    errs = []
    for n in (64, 128):
        grid = RadialGrid(n=n, r_max=1.5, r_min=0.5)
        r = grid.centers()
        h, U, V = exact(0.0, r)
        state = RadialState(r=r, h=h, U=U, V=V, h_bar=1.0)
        scheme = Scheme(order=1)
        bc = radial.RadialBC(inner="trace", outer="trace",
                             trace=lambda t, rg: exact(t, rg))
        t = 0.0
        while t < 0.5 - 1e-14:
            dt = min(radial.cfl_dt(state, scheme), 0.5 - t)
            state, dt, _ = radial.step(state, scheme, bc, dt)
            t = state.t
        he, Ue, Ve = exact(0.5, r)
        errs.append(math.sqrt(float(np.sum(
            (state.h - he) ** 2 + (state.U - Ue) ** 2 + (state.V - Ve) ** 2)
            * grid.dr)))
    order = math.log2(errs[0] / errs[1])
    assert order == pytest.approx(1.0, abs=0.3)


# ---------------------------------------------------------------------------
# Lagrangian probe
# ---------------------------------------------------------------------------

def test_lagrangian_probe_rest_state_is_exact():
    states = [rest_state(n=256, r_max=2.0)]
    for t in (0.1, 0.2):
        s = states[0]
        states.append(RadialState(r=s.r, h=s.h, U=s.U, V=s.V, h_bar=s.h_bar, t=t))
    probe = radial.lagrangian_probe(states, np.linspace(0.6, 1.2, 5))
    assert np.max(probe["angular_drift"]) == 0.0
    assert np.max(probe["mass_drift"]) == 0.0
    assert np.max(probe["v_residual"]) == 0.0


def test_lagrangian_paths_match_separated_scaling_law():
    # on a separated-trace run, tracked paths follow X = exp((g0-g)/2) x0
    # and the angular-velocity reconstruction matches to scheme accuracy
    traj = separated.trace(0.0, 0.5, 0.25, 0.6, tol=1e-12)

    def exact(t, r):
        g, xi, eta = traj.sol.sample(t)[:3]
        return separated.reconstruct_fields((g, xi, eta), np.asarray(r))

    n = 512
    grid = RadialGrid(n=n, r_max=1.6, r_min=0.4)
    r = grid.centers()
    h, U, V = exact(0.0, r)
    state = RadialState(r=r, h=h, U=U, V=V, h_bar=1.0)
    scheme = Scheme(order=2)
    bc = radial.RadialBC(inner="trace", outer="trace",
                         trace=lambda t, rg: exact(t, rg))
    states = [state]
    t = 0.0
    while t < 0.5 - 1e-14:
        dt = min(radial.cfl_dt(state, scheme), 0.5 - t)
        state, dt, _ = radial.step(state, scheme, bc, dt)
        t = state.t
        states.append(state)
    x0 = np.array([0.8, 1.0, 1.2])
    times, X = radial.track_paths(states, x0)
    g_at = traj.sol.sample(times)[:, 0]
    X_exact = np.exp(0.5 * (traj.g[0] - g_at))[:, None] * x0[None, :]
    assert np.max(np.abs(X - X_exact)) < 5e-6
    probe = radial.lagrangian_probe(states, x0)
    assert np.max(probe["v_residual"]) < 5e-5


def test_lagrangian_probe_path_exit_raises():
    # a uniform outward velocity pushes paths through the outer boundary
    grid = RadialGrid(n=64, r_max=1.0)
    r = grid.centers()
    mk = lambda t: RadialState(r=r, h=np.ones_like(r), U=np.full_like(r, 2.0),
                               V=np.zeros_like(r), h_bar=1.0, t=t)
    with pytest.raises(radial.PathExitError):
        radial.track_paths([mk(0.0), mk(0.4)], np.array([0.9]))


def test_run_wires_traces_for_separated_scenarios():
    # a separated-trace config runs with Dirichlet ghosts from the orbit
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "separated_trace", "g0": 0.0, "xi0": 0.5,
                 "eta0": 0.25},
        grid={"n": 256, "r_max": 1.5, "r_min": 0.5}, h_bar=1.0, horizon=0.4)
    rec = radial.run(cfg).check()
    assert rec.termination == "horizon"
    # depth tracks the orbit: no boundary artifact beyond scheme error
    traj = separated.trace(0.0, 0.5, 0.25, 0.5, tol=1e-12)
    g, xi, eta = traj.sol.sample(0.4)[:3]
    cfg2 = ScenarioConfig(**{**cfg.__dict__, "store_states": True,
                             "store_every": 10 ** 9})
    rec2 = radial.run(cfg2)
    final = rec2.states[-1]
    he, Ue, Ve = separated.reconstruct_fields((g, xi, eta), final.r)
    assert np.max(np.abs(final.h - he)) < 5e-4


def test_run_rejects_horizon_past_trace_lifespan():
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "separated_trace", "g0": 0.0, "xi0": 2.0,
                 "eta0": 4.0},
        grid={"n": 64, "r_max": 1.5, "r_min": 0.5}, h_bar=1.0, horizon=2.0)
    with pytest.raises(ValueError, match="lifespan"):
        radial.run(cfg)


def test_run_record_structure():
    cfg = ScenarioConfig(
        kind="radial",
        initial={"profile": "h_bump", "center": 1.0, "width": 0.25, "amp": 0.05},
        grid={"n": 256, "r_max": 3.0}, h_bar=1.0, horizon=0.2,
        store_states=True, store_every=4)
    rec = radial.run(cfg).check()
    t = rec.times
    assert np.all(np.diff(t) > 0)
    assert rec.termination == "horizon"
    assert rec.states[0].t == 0.0
    assert rec.states[-1].t == pytest.approx(0.2, abs=1e-12)
    assert rec.profile["u_linf"] == 0.0
