"""Moment functionals, the moment blowup criterion with its scaling
families, support-cone tracking, and the weighted inward-momentum monitor
for compact radial data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import MomentSet, PlanarState, RadialState
from .quadrature import quad_adaptive


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def moments_radial(state: RadialState) -> MomentSet:
    """Moment functionals by midpoint quadrature of the radial reductions:
    P1 = 2pi int h U r^2 dr, P2 = 2pi int h V r^2 dr,
    E = 2pi int [h (U^2+V^2) + h^2 - h_bar^2] r dr, m = 2pi int (h - h_bar) r dr.
    """
    r = state.r
    dr = float(r[1] - r[0])
    w = 2.0 * math.pi * dr
    h, U, V = state.h, state.U, state.V
    P1 = w * float(np.sum(h * U * r * r))
    P2 = w * float(np.sum(h * V * r * r))
    E = w * float(np.sum((h * (U * U + V * V) + h * h - state.h_bar ** 2) * r))
    m = w * float(np.sum((h - state.h_bar) * r))
    return MomentSet.from_values(P1, P2, E, m)


def moments_planar(state: PlanarState) -> MomentSet:
    """Midpoint-rule planar moments P1 = int h(ux + vy), P2 = int h(vx - uy)."""
    X, Y = state.grid.centers()
    dA = state.grid.dx * state.grid.dy
    h, hu, hv = state.h, state.hu, state.hv
    P1 = dA * float(np.sum(hu * X + hv * Y))
    P2 = dA * float(np.sum(hv * X - hu * Y))
    u = hu / h
    v = hv / h
    E = dA * float(np.sum(h * (u * u + v * v) + h * h - state.h_bar ** 2))
    m = dA * float(np.sum(h - state.h_bar))
    return MomentSet.from_values(P1, P2, E, m)


def moment_forecast(ms0: MomentSet, t):
    """Closed-form moment evolution P1' = E + P2, P2' = -P1 with E frozen:

        P1(t) = p sin t + q cos t,
        P2(t) = -E(0) + p cos t - q sin t,

    where matching at t = 0 gives q = P1(0) and p = E(0) + P2(0).
    """
    t = np.asarray(t, dtype=float)
    P1 = ms0.p * np.sin(t) + ms0.q * np.cos(t)
    P2 = -ms0.E + ms0.p * np.cos(t) - ms0.q * np.sin(t)
    return P1, P2


@dataclass(frozen=True)
class CriterionResult:
    holds: bool
    margin: float
    lhs: float
    rhs: float
    mass_positive: bool


def moment_criterion(ms0: MomentSet, R: float, h_bar: float,
                     h0_sup: float) -> CriterionResult:
    """Moment blowup criterion for compact data of support radius R:

        m(0) > 0   and   P1(0)^2 + (E(0) + P2(0))^2
                           >= pi (R + 2 pi sqrt(h_bar))^4 E(0) sup h0.

    margin is lhs - rhs regardless of the mass condition.
    """
    lhs = ms0.P1 ** 2 + (ms0.E + ms0.P2) ** 2
    rhs = math.pi * (R + 2.0 * math.pi * math.sqrt(h_bar)) ** 4 * ms0.E * h0_sup
    margin = lhs - rhs
    mass_ok = ms0.m > 0.0
    return CriterionResult(holds=bool(mass_ok and margin >= 0.0), margin=margin,
                           lhs=lhs, rhs=rhs, mass_positive=mass_ok)


def scale_family(state: PlanarState, lam: float, kind: str) -> PlanarState:
    """Scaling families on planar data.

    amplitude: (h, u, v) -> (h/lam, lam u, lam v) with h_bar -> h_bar/lam.
    similarity: (h, u, v)(x) -> (lam^2 h, lam u, lam v)(x/lam); realized by
    stretching the grid by lam, so cell centers map exactly.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if kind == "amplitude":
        h = state.h / lam
        u = state.u * lam
        v = state.v * lam
        return PlanarState(grid=state.grid, h=h, hu=h * u, hv=h * v,
                           h_bar=state.h_bar / lam, t=state.t)
    if kind == "similarity":
        from dataclasses import replace
        grid = replace(state.grid, x_half=state.grid.x_half * lam,
                       y_half=state.grid.y_half * lam)
        h = lam * lam * state.h
        return PlanarState(grid=grid, h=h, hu=lam * h * state.u,
                           hv=lam * h * state.v,
                           h_bar=lam * lam * state.h_bar, t=state.t)
    raise ValueError("kind must be amplitude or similarity")


def criterion_threshold(base: PlanarState, R: float, lam_hi: float = 1e6,
                        tol: float = 1e-3) -> float:
    """Smallest amplitude-scaling lambda* at which the criterion margin
    turns non-negative, bracketed by bisection to width tol."""

    def margin(lam):
        s = scale_family(base, lam, "amplitude")
        ms = moments_planar(s)
        return moment_criterion(ms, R, s.h_bar, float(np.max(s.h))).margin

    lo, hi = 1.0, 2.0
    if margin(lo) >= 0:
        raise ValueError("criterion already holds at lambda = 1")
    while margin(hi) < 0:
        hi *= 2.0
        if hi > lam_hi:
            raise RuntimeError("no sign change up to lambda = %g" % lam_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# support tracking
# ---------------------------------------------------------------------------

def support_radius_of_state(state: RadialState, threshold: float) -> float:
    """Outer radius where |(h - h_bar, U, V)| exceeds threshold (0 if none)."""
    dev = np.maximum(np.abs(state.h - state.h_bar),
                     np.maximum(np.abs(state.U), np.abs(state.V)))
    idx = np.nonzero(dev > threshold)[0]
    if idx.size == 0:
        return 0.0
    return float(state.r[idx[-1]])


def support_tracker(states: Sequence[RadialState], threshold: Optional[float] = None,
                    eps_grid: float = 0.05) -> dict:
    """Support-radius series of a stored run with its cone bound.

    The default threshold is 1e-8 times the initial perturbation amplitude
    (exact-zero support does not survive one dissipative step).  cone_ok
    reports series(t) <= R0 + (sigma + eps_grid*sigma) t + 2 dr; the
    measured slope over the second half of the window is also returned.
    """
    s0 = states[0]
    amp = float(np.max(np.maximum(np.abs(s0.h - s0.h_bar),
                                  np.maximum(np.abs(s0.U), np.abs(s0.V)))))
    if threshold is None:
        threshold = 1e-8 * amp if amp > 0 else 1e-8
    t = np.array([s.t for s in states])
    radius = np.array([support_radius_of_state(s, threshold) for s in states])
    sigma = math.sqrt(s0.h_bar)
    dr = float(s0.r[1] - s0.r[0])
    R0 = radius[0]
    bound = R0 + sigma * (1.0 + eps_grid) * t + 2.0 * dr
    late = t >= 0.5 * t[-1]
    if np.count_nonzero(late) >= 2 and t[-1] > t[0]:
        A = np.vstack([t[late], np.ones(np.count_nonzero(late))]).T
        slope = float(np.linalg.lstsq(A, radius[late], rcond=None)[0][0])
    else:
        slope = 0.0
    return {
        "t": t,
        "radius": radius,
        "threshold": threshold,
        "sigma": sigma,
        "slope": slope,
        "cone_ok": bool(np.all(radius <= bound + 1e-12)),
        "bound": bound,
    }


# ---------------------------------------------------------------------------
# weighted inward-momentum monitor
# ---------------------------------------------------------------------------

def cutoff_mu(r):
    """Smooth cutoff: 1 on [1/3, 4/3], polynomial (1-s^2)^4 ramps to zero
    over collars of width 1/6 on both sides."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    core = (r >= 1.0 / 3.0) & (r <= 4.0 / 3.0)
    out[core] = 1.0
    left = (r > 1.0 / 6.0) & (r < 1.0 / 3.0)
    s = (1.0 / 3.0 - r[left]) * 6.0
    out[left] = (1.0 - s * s) ** 4
    right = (r > 4.0 / 3.0) & (r < 1.5)
    s = (r[right] - 4.0 / 3.0) * 6.0
    out[right] = (1.0 - s * s) ** 4
    return out


def cutoff_mu_prime(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    left = (r > 1.0 / 6.0) & (r < 1.0 / 3.0)
    s = (1.0 / 3.0 - r[left]) * 6.0
    out[left] = 48.0 * s * (1.0 - s * s) ** 3
    right = (r > 4.0 / 3.0) & (r < 1.5)
    s = (r[right] - 4.0 / 3.0) * 6.0
    out[right] = -48.0 * s * (1.0 - s * s) ** 3
    return out


def weight_w(r, t, T):
    """Space-time weight e^{-r} (T-t)^2 mu(r) for t <= T, zero after T."""
    r = np.asarray(r, dtype=float)
    t = float(t)
    if t > T:
        return np.zeros_like(r)
    return np.exp(-r) * (T - t) ** 2 * cutoff_mu(r)


def phi_window(t, sigma):
    """phi(t) = int_{A(t)} e^{-r} dr over A(t) = [1/2 - sigma t, 1 + sigma t]."""
    return math.exp(-(0.5 - sigma * t)) - math.exp(-(1.0 + sigma * t))


def phi_growth_constant(h_bar: float) -> float:
    """Upper bound a of phi'/phi, attained at t = 0:
    a = sqrt(h_bar) (1 + e^{-1/2}) / (1 - e^{-1/2})."""
    e = math.exp(-0.5)
    return math.sqrt(h_bar) * (1.0 + e) / (1.0 - e)


@dataclass
class WeightedMomentumReport:
    """Weighted inward-momentum functionals of a stored radial run.

    alpha is the weighted initial inward momentum; F the running weighted
    momentum integral; I1..I3 the remainder terms; the claim flag tests
    I <= 4 alpha T^2 / 5 and the monitored flag tests the growth inequality
    F' >= alpha T^2/5 + (3/2) varphi (F/varphi)^{4/3} (F' by centered
    differences over the T grid).
    """

    alpha: float
    nu: float
    T_bar: float
    a: float
    eps: float
    T: np.ndarray
    F: np.ndarray
    F_prime: np.ndarray
    phi: np.ndarray
    varphi: np.ndarray
    phi0: float
    I1: np.ndarray
    I2: np.ndarray
    I3: np.ndarray
    ratio: np.ndarray
    claim_ok: np.ndarray
    monitored_ok: np.ndarray
    degenerate: bool = False
    inapplicable: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def _window_mask(r, t, sigma):
    return (r >= 0.5 - sigma * t) & (r <= 1.0 + sigma * t)


def weighted_momentum_report(states, h_bar: float, T_values,
                             eps: float = 0.05) -> WeightedMomentumReport:
    """Evaluate the weighted-momentum monitor on stored states.

    Requires the initial radial velocity to be non-positive on its support;
    otherwise the report is marked inapplicable.
    """
    T_values = np.asarray(T_values, dtype=float)
    s0 = states[0]
    r = s0.r
    dr = float(r[1] - r[0])
    sigma = math.sqrt(h_bar)
    emu = np.exp(-r) * cutoff_mu(r)
    mu_r = cutoff_mu_prime(r)

    inapplicable = bool(np.any(s0.U > 1e-12))
    u_sup = float(np.max(np.abs(s0.U)))
    nu = u_sup ** (1.0 / 3.0 - eps) if u_sup > 0 else 0.0
    T_bar = 2.0 / nu if nu > 0 else math.inf

    alpha = -float(np.sum((s0.h * s0.U * emu)[_window_mask(r, 0.0, sigma)])) * dr

    times = np.array([s.t for s in states])
    G = np.empty_like(times)        # -int_A hU e^-r mu dr
    HV = np.empty_like(times)       # int_A hV e^-r mu dr
    HV2 = np.empty_like(times)      # int_A hV^2 e^-r mu / r dr
    OUT = np.empty_like(times)      # int_{R+ \ A} (h^2/2 + hU^2) e^-r mu_r dr
    for k, s in enumerate(states):
        inside = _window_mask(r, s.t, sigma)
        G[k] = -np.sum((s.h * s.U * emu)[inside]) * dr
        HV[k] = np.sum((s.h * s.V * emu)[inside]) * dr
        HV2[k] = np.sum((s.h * s.V ** 2 * emu / r)[inside]) * dr
        out = ~inside
        OUT[k] = np.sum(((0.5 * s.h ** 2 + s.h * s.U ** 2)
                         * np.exp(-r) * mu_r)[out]) * dr

    def time_weighted(series, T):
        sel = times <= T + 1e-14
        ts = times[sel]
        if ts.size < 2:
            return 0.0
        return float(np.trapezoid(series[sel] * (T - ts) ** 2, ts))

    F = np.array([time_weighted(G, T) for T in T_values])
    I1 = np.array([time_weighted(HV2, T) for T in T_values])
    I2 = np.array([time_weighted(HV, T) for T in T_values])
    I3 = np.array([time_weighted(OUT, T) for T in T_values])

    phi0 = phi_window(0.0, sigma)
    phi = np.array([phi_window(T, sigma) for T in T_values])
    varphi = np.array([
        quad_adaptive(lambda t, TT=T: (TT - t) ** 2
                      * (np.exp(-(0.5 - sigma * t)) - np.exp(-(1.0 + sigma * t))),
                      0.0, T, tol=1e-12).value if T > 0 else 0.0
        for T in T_values])

    if T_values.size >= 3:
        F_prime = np.gradient(F, T_values, edge_order=2)
    elif T_values.size == 2:
        F_prime = np.gradient(F, T_values)
    else:
        F_prime = np.zeros_like(F)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(varphi > 0, F / np.where(varphi > 0, varphi, 1.0), 0.0)
    degenerate = alpha <= 0.0 and np.allclose(F, 0.0)
    I_total = I1 + I2 + I3
    claim_ok = I_total <= 0.8 * alpha * T_values ** 2 + 1e-14
    monitored_rhs = (alpha * T_values ** 2 / 5.0
                     + 1.5 * varphi * np.abs(ratio) ** (4.0 / 3.0))
    monitored_ok = F_prime >= monitored_rhs - 1e-14

    return WeightedMomentumReport(
        alpha=alpha, nu=nu, T_bar=T_bar, a=phi_growth_constant(h_bar),
        eps=eps, T=T_values, F=F, F_prime=F_prime, phi=phi, varphi=varphi,
        phi0=phi0, I1=I1, I2=I2, I3=I3, ratio=ratio, claim_ok=claim_ok,
        monitored_ok=monitored_ok, degenerate=degenerate,
        inapplicable=inapplicable,
        note="initial radial velocity not non-positive" if inapplicable else "")
