"""Separated-variable reduction of the radial rotating shallow water flow.

With angular velocity V = r (e^g - 1/2), the fields reduce to

    h = (r^2/2) (e^{2g} - 1/4 + eta/2 - xi^2/4),   U = -(r/2) xi,

where xi = g', eta = g'' evolve by xi' = eta, eta' = xi (3 eta - xi^2 - 1).
Two scalars classify every orbit:

    theta = xi^2 + 1 - eta,
    kappa = (xi^2 + 1 - 2 eta) / theta^2    (first integral when theta != 0).

kappa0 = 1 is the unique equilibrium, kappa0 in (0, 1) gives 2*pi-periodic
orbits, kappa0 <= 0 gives finite-time blowup, and theta == 0 is the
explicit tangent branch xi = tan(t + C).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (BLOWUP, EQUILIBRIUM, EXPLICIT_TAN, PERIODIC, Regime,
                    SeparatedState)
from .ode import ESCAPE, OdeSolution, integrate_adaptive
from .quadrature import quad_adaptive, quad_singular

ESCAPE_THETA = 1.0e6       # trajectory truncation threshold on |theta|
CROSSCHECK_THETA = 1.0e9   # escape threshold used for blowup-time checks;
                           # at 1e6 the kappa0 = 0 branch (theta ~ delta^-2)
                           # is still ~1e-3 away from the blowup time

_ZERO_TOL = 1.0e-12


class ZeroThetaError(ValueError):
    """theta = 0: the orbit is on the explicit tangent branch."""


class BranchSelectionError(RuntimeError):
    """Quadrature blowup time disagrees with the ODE escape time."""


class UnphysicalReconstructionWarning(UserWarning):
    """Reconstructed depth is negative somewhere (bracket < 0)."""


class FitWindowError(RuntimeError):
    """No trajectory samples fall inside the rate-fit window."""


def theta(xi, eta):
    """theta = xi^2 + 1 - eta."""
    return xi * xi + 1.0 - eta


def kappa(xi, eta):
    """kappa = (xi^2 + 1 - 2 eta) / theta^2; requires theta != 0.

    The value never exceeds 1; that bound is kept as a guard against
    floating-point escapes.
    """
    th = theta(xi, eta)
    if abs(th) <= _ZERO_TOL * (xi * xi + 1.0 + abs(eta)):
        raise ZeroThetaError("theta = 0 at (xi, eta) = (%g, %g)" % (xi, eta))
    k = (xi * xi + 1.0 - 2.0 * eta) / (th * th)
    if k > 1.0 + 1e-9:
        raise RuntimeError("kappa exceeded 1: %r" % (k,))
    return min(k, 1.0)


def rhs(t, y):
    """Right-hand side of the (g, xi, eta) system."""
    xi, eta = y[1], y[2]
    return np.array([xi, eta, xi * (3.0 * eta - xi * xi - 1.0)])


def rhs_augmented(t, y):
    """(g, xi, eta) system augmented with theta' = xi * theta.

    Near blowup, xi^2 and eta reach ~1e12 while theta ~ 1e6, so recovering
    theta from xi^2 + 1 - eta loses ~6 digits to cancellation; integrating
    theta alongside keeps it (and kappa, still an exact first integral of
    the augmented system) at full relative accuracy.  The branch-ambiguous
    square-root equation for theta is never used.
    """
    xi, eta, th = y[1], y[2], y[3]
    return np.array([xi, eta, xi * (3.0 * eta - xi * xi - 1.0), xi * th])


def theta_bounds(kappa0: float):
    """Turning values of theta for kappa0 in (0, 1): the roots of
    2 theta - kappa0 theta^2 - 1."""
    if not (0.0 < kappa0 < 1.0):
        raise ValueError("kappa0 must lie in (0, 1)")
    root = math.sqrt(1.0 - kappa0)
    return (1.0 - root) / kappa0, (1.0 + root) / kappa0


def initial_from_kappa(kappa0: float, xi0: float = 0.0, branch: int = 1):
    """Pick (xi0, eta0) with the requested invariant kappa0.

    branch selects the sign of theta0 via theta0 = (1 -/+ sqrt(1 - kappa0 A))
    / kappa0 with A = xi0^2 + 1 (only the positive branch exists for
    kappa0 = 0 or kappa0 A > 0 near 1).
    """
    A = xi0 * xi0 + 1.0
    if kappa0 == 0.0:
        return xi0, 0.5 * A
    disc = 1.0 - kappa0 * A
    if disc < 0:
        raise ValueError("no real state: kappa0 * (xi0^2 + 1) > 1")
    th0 = (1.0 - math.sqrt(disc)) / kappa0 if branch > 0 else \
        (1.0 + math.sqrt(disc)) / kappa0
    return xi0, A - th0


def classify(xi0: float, eta0: float) -> Regime:
    """Classify the orbit through (xi0, eta0)."""
    try:
        k0 = kappa(xi0, eta0)
    except ZeroThetaError:
        return Regime(tag=EXPLICIT_TAN, t_blowup=0.5 * math.pi - math.atan(xi0))
    if abs(k0 - 1.0) <= 1e-12:
        return Regime(tag=EQUILIBRIUM, kappa0=1.0)
    if abs(k0) <= 1e-13:
        k0 = 0.0
    if k0 > 0.0:
        return Regime(tag=PERIODIC, kappa0=k0, period=2.0 * math.pi)
    return Regime(tag=BLOWUP, kappa0=k0, t_blowup=blowup_time(xi0, eta0))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class SeparatedTrajectory:
    """Integrated orbit with its regime and invariant-drift series."""

    sol: OdeSolution
    regime: Regime
    t: np.ndarray
    g: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    kappa_drift: Optional[np.ndarray]      # None on the tangent branch
    identity_residual: np.ndarray          # max residual of the algebraic
                                           # relations xi^2+1 = 2th-k0 th^2,
                                           # eta = th - k0 th^2
    g_link_residual: Optional[np.ndarray]  # |(g - ln th) - (g0 - ln th0)|

    @property
    def truncated(self) -> bool:
        return self.sol.termination == ESCAPE

    @property
    def t_escape(self) -> Optional[float]:
        return self.sol.t_escape

    def state_at(self, t: float) -> SeparatedState:
        g, xi, eta = self.sol.sample(t)[:3]
        return SeparatedState(t=float(t), g=float(g), xi=float(xi), eta=float(eta))


def trace(g0: float, xi0: float, eta0: float, horizon: float,
          tol: float = 1e-10) -> SeparatedTrajectory:
    """Integrate the reduced system from (g0, xi0, eta0) up to horizon,
    truncating at |theta| (or |xi|) above the escape threshold on the
    singular branches."""
    regime = classify(xi0, eta0)
    esc = None
    if regime.tag in (BLOWUP, EXPLICIT_TAN):
        def esc(y):
            return abs(y[3]) > ESCAPE_THETA or abs(y[1]) > ESCAPE_THETA
    th0 = theta(xi0, eta0)
    sol = integrate_adaptive(rhs_augmented, (g0, xi0, eta0, th0),
                             (0.0, horizon), tol=tol, escape=esc)
    t = sol.t
    g, xi, eta, th = sol.y[:, 0], sol.y[:, 1], sol.y[:, 2], sol.y[:, 3]

    kappa_drift = None
    g_link = None
    if regime.tag != EXPLICIT_TAN:
        k0 = regime.kappa0
        with np.errstate(divide="ignore", invalid="ignore"):
            kap = np.where(th != 0.0, (xi * xi + 1.0 - 2.0 * eta) / (th * th), k0)
        kappa_drift = kap - k0
        # residuals of the algebraic relations between (xi, eta) and theta,
        # relative to the term magnitudes (the raw terms reach ~1e12)
        lhs1 = xi * xi + 1.0
        rhs1 = 2.0 * th - k0 * th * th
        lhs2 = eta
        rhs2 = th - k0 * th * th
        ident = np.maximum(
            np.abs(lhs1 - rhs1) / (1.0 + np.abs(lhs1) + np.abs(rhs1)),
            np.abs(lhs2 - rhs2) / (1.0 + np.abs(lhs2) + np.abs(rhs2)))
        if th0 > 0:
            pos = th > 0
            g_link = np.full_like(t, np.nan)
            g_link[pos] = np.abs((g[pos] - np.log(th[pos])) - (g0 - math.log(th0)))
    else:
        # on the tangent branch the algebraic relations degenerate to th = 0
        ident = np.abs(th) / (1.0 + xi * xi + np.abs(eta))

    return SeparatedTrajectory(sol=sol, regime=regime, t=t, g=g, xi=xi,
                               eta=eta, theta=th, kappa_drift=kappa_drift,
                               identity_residual=ident, g_link_residual=g_link)


# ---------------------------------------------------------------------------
# period and blowup-time quadrature
# ---------------------------------------------------------------------------

def period_integral(kappa0: float, tol: float = 1e-10) -> float:
    """Half-cycle time of theta between its turning values; equals pi for
    every kappa0 in (0, 1).

    Under theta = lo + (hi - lo) sin^2(s) the radicand factors exactly as
    (hi - lo)^2 sin^2 s cos^2 s, so the transformed integrand collapses to
    the smooth 2 / (sqrt(kappa0) theta(s)).  This form survives the
    degenerate limit kappa0 -> 1 where hi - lo underflows any generic
    endpoint treatment.
    """
    lo, hi = theta_bounds(kappa0)
    width = hi - lo
    rk = math.sqrt(kappa0)

    def g(s):
        sn = np.sin(s)
        return 2.0 / (rk * (lo + width * sn * sn))

    res = quad_adaptive(g, 0.0, 0.5 * math.pi, tol=tol)
    if abs(res.value - math.pi) > max(100.0 * tol, 1e-8):
        raise RuntimeError(
            "period integral drifted from pi: %.3e" % (res.value - math.pi))
    return res.value


def _tail_from_turn(kappa0: float, negative: bool, tol: float) -> float:
    """Travel time of |theta| from its turning value to infinity.

    With s = 1/w the integrand becomes 1/sqrt(-kappa0 -/+ 2w - w^2) on
    [0, w_turn], regular at 0 and inverse-square-root singular at the
    turning end; the radicand is factored over its exact roots.
    """
    root = math.sqrt(1.0 - kappa0)
    if negative:
        # -kappa0 - 2w - w^2 = (w_turn - w)(w - w_neg)
        w_turn, w_neg = root - 1.0, -root - 1.0
    else:
        # -kappa0 + 2w - w^2 = (w_turn - w)(w - w_neg)
        w_turn, w_neg = root + 1.0, 1.0 - root

    def g(w):
        return 1.0 / np.sqrt((w_turn - w) * (w - w_neg))

    return quad_singular(g, 0.0, w_turn, singular_ends=(False, True), tol=tol).value


def _leg_from_turn(u_start: float, kappa0: float, negative: bool,
                   tol: float) -> float:
    """Travel time of |theta| between its turning value and |theta(0)|,
    singular at the turning end."""
    root = math.sqrt(1.0 - kappa0)
    if negative:
        # -2u - kappa0 u^2 - 1 = -kappa0 (u - u_turn)(u - u_neg)
        u_turn, u_neg = (root + 1.0) / -kappa0, (1.0 - root) / -kappa0
    else:
        # 2u - kappa0 u^2 - 1 = -kappa0 (u - u_turn)(u - u_neg)
        u_turn, u_neg = (1.0 - root) / kappa0, (root + 1.0) / kappa0
    if u_start <= u_turn * (1.0 + 1e-14):
        return 0.0

    def f(s):
        return 1.0 / (s * np.sqrt(-kappa0 * (s - u_turn) * (s - u_neg)))

    return quad_singular(f, u_turn, u_start, singular_ends=(True, False),
                         tol=tol).value


def blowup_time_quadrature(xi0: float, eta0: float, tol: float = 1e-11) -> float:
    """Blowup time by quadrature of the theta travel-time integral.

    The travel direction is set by the signs of xi0 and theta0: theta moves
    away from (or first toward, then through) its turning value and on to
    +/- infinity, so t0 = tail(turn) - sign(xi0) * leg(turn -> theta0).
    """
    th0 = theta(xi0, eta0)
    if abs(th0) <= _ZERO_TOL * (xi0 * xi0 + 1.0 + abs(eta0)):
        return 0.5 * math.pi - math.atan(xi0)
    k0 = kappa(xi0, eta0)
    if abs(k0) <= 1e-13:
        # explicit half-angle tangent solution xi = tan((t + C)/2)
        return math.pi - 2.0 * math.atan(xi0)
    if k0 > 0.0:
        raise ValueError("kappa0 = %g > 0: orbit does not blow up" % (k0,))
    negative = th0 < 0
    sgn_xi = 1.0 if xi0 > 0 else (-1.0 if xi0 < 0 else 0.0)
    tail = _tail_from_turn(k0, negative, tol)
    leg = _leg_from_turn(abs(th0), k0, negative, tol) if sgn_xi != 0.0 else 0.0
    return tail - sgn_xi * leg


def escape_time_ode(xi0: float, eta0: float, threshold: float = CROSSCHECK_THETA,
                    tol: float = 1e-10, horizon: float = 20.0) -> float:
    """Escape time of |theta| (or |xi|) past threshold under direct
    integration; the independent check of the quadrature branch logic."""

    def esc(y):
        return abs(y[3]) > threshold or abs(y[1]) > threshold

    sol = integrate_adaptive(rhs_augmented,
                             (0.0, xi0, eta0, theta(xi0, eta0)),
                             (0.0, horizon), tol=tol, escape=esc)
    if sol.termination != ESCAPE:
        raise RuntimeError("orbit did not escape before t = %g" % horizon)
    return float(sol.t_escape)


def blowup_time(xi0: float, eta0: float, crosscheck: bool = True,
                rtol: float = 1e-4) -> float:
    """Blowup time of a blowup or tangent-branch orbit.

    The quadrature value is cross-checked against the ODE escape time;
    disagreement beyond rtol signals a branch-selection bug and raises.
    """
    t0 = blowup_time_quadrature(xi0, eta0)
    if crosscheck:
        t_esc = escape_time_ode(xi0, eta0)
        if abs(t0 - t_esc) > rtol * abs(t0):
            raise BranchSelectionError(
                "quadrature t0 = %.10g vs ODE escape %.10g" % (t0, t_esc))
    return t0


# ---------------------------------------------------------------------------
# field reconstruction and particle paths
# ---------------------------------------------------------------------------

def height_bracket(g: float, xi: float, eta: float) -> float:
    """r-independent factor of the reconstructed depth h = (r^2/2)*bracket."""
    return math.exp(2.0 * g) - 0.25 + 0.5 * eta - 0.25 * xi * xi


def reconstruct_fields(state, r):
    """Fields (h, U, V) of the separated solution at radii r.

    state is a SeparatedState or a (g, xi, eta) triple.  A negative depth
    bracket is reported through UnphysicalReconstructionWarning, never
    clamped.
    """
    if isinstance(state, SeparatedState):
        g, xi, eta = state.g, state.xi, state.eta
    else:
        g, xi, eta = state
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    bracket = height_bracket(g, xi, eta)
    if bracket < 0:
        warnings.warn("negative depth bracket %.6g: reconstruction is "
                      "unphysical at every radius" % bracket,
                      UnphysicalReconstructionWarning)
    h = 0.5 * r * r * bracket
    U = -0.5 * r * xi
    V = r * (math.exp(g) - 0.5)
    return h, U, V


def particle_path(x0: float, traj: SeparatedTrajectory, t):
    """Particle position exp((g(0) - g(t))/2) * x0 at time(s) t."""
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    tq = np.atleast_1d(np.asarray(t, dtype=float))
    if tq.max() > traj.sol.t_end + 1e-12:
        raise ValueError("t beyond the trajectory truncation")
    g = traj.sol.sample(tq)[:, 0]
    out = np.exp(0.5 * (traj.g[0] - g)) * x0
    if np.ndim(t) == 0:
        return float(out[0])
    return out


def g_theta_residual(traj: SeparatedTrajectory) -> np.ndarray:
    """Residual of the conserved combination g - ln theta (theta0 > 0)."""
    if traj.theta[0] <= 0:
        raise ValueError("g-theta link requires theta(0) > 0")
    if traj.g_link_residual is None:
        raise ValueError("trajectory carries no g-theta residual")
    return traj.g_link_residual


# ---------------------------------------------------------------------------
# blowup rates
# ---------------------------------------------------------------------------

@dataclass
class BlowupReport:
    """Fitted blowup constants along particle paths.

    rate_* are the constants C of C/(t0 - t) least-squares fits of the path
    suprema of h, U^2, V^2 (exp_* the fitted exponents).  theta_rate holds
    samples of theta(t)*(t0 - t); theta_rate_quadratic holds
    2*theta(t)*sin^2((t0-t)/2), the combination that is exactly 1 on the
    kappa0 = 0 branch.
    """

    t0: float
    rate_h: float
    rate_U2: float
    rate_V2: float
    exp_h: float
    exp_U2: float
    exp_V2: float
    window_t: np.ndarray
    theta_rate_t: np.ndarray
    theta_rate: np.ndarray
    theta_rate_quadratic: np.ndarray


def _fit_rate(logq, logdelta):
    # least squares of log q against -log(t0 - t)
    A = np.vstack([-logdelta, np.ones_like(logdelta)]).T
    slope, intercept = np.linalg.lstsq(A, logq, rcond=None)[0]
    return math.exp(intercept), slope


def blowup_rates(traj: SeparatedTrajectory, x0_probe: Sequence[float] = (0.5, 1.0, 1.5),
                 window=(1e2, 1e5)) -> BlowupReport:
    """Fit C/(t0 - t) to the particle-path suprema of h, U^2, V^2 over the
    window where |theta| (or eta on the tangent branch) lies in [1e2, 1e5];
    below that the asymptotic regime has not set in, above it truncation
    effects appear."""
    regime = traj.regime
    if regime.tag not in (BLOWUP, EXPLICIT_TAN):
        raise ValueError("blowup rates require a blowup or tangent-branch orbit")
    t0 = regime.t_blowup
    gauge = np.abs(traj.theta) if regime.tag == BLOWUP else np.abs(traj.eta)
    sel = (gauge >= window[0]) & (gauge <= window[1]) & (traj.t < t0)
    if not np.any(sel):
        raise FitWindowError("no samples with gauge in [%g, %g]" % window)
    ts = traj.t[sel]
    delta = t0 - ts

    x0 = np.asarray(x0_probe, dtype=float)
    sup_h = np.empty_like(ts)
    sup_U2 = np.empty_like(ts)
    sup_V2 = np.empty_like(ts)
    g0 = traj.g[0]
    for i, (g, xi, eta) in enumerate(zip(
            traj.g[sel], traj.xi[sel], traj.eta[sel])):
        radii = np.exp(0.5 * (g0 - g)) * x0
        bracket = math.exp(2.0 * g) - 0.25 + 0.5 * eta - 0.25 * xi * xi
        h = 0.5 * radii ** 2 * bracket
        U = -0.5 * radii * xi
        V = radii * (math.exp(g) - 0.5)
        sup_h[i] = np.max(np.abs(h))
        sup_U2[i] = np.max(U * U)
        sup_V2[i] = np.max(V * V)

    logd = np.log(delta)
    rate_h, exp_h = _fit_rate(np.log(sup_h), logd)
    rate_U2, exp_U2 = _fit_rate(np.log(np.maximum(sup_U2, 1e-300)), logd)
    rate_V2, exp_V2 = _fit_rate(np.log(np.maximum(sup_V2, 1e-300)), logd)

    # last sampled decade of t0 - t
    delta_all = t0 - traj.t
    keep = delta_all > 0
    d_end = float(np.min(delta_all[keep]))
    decade = keep & (delta_all <= 10.0 * d_end)
    td = traj.t[decade]
    thd = traj.theta[decade]
    dd = delta_all[decade]
    return BlowupReport(
        t0=t0, rate_h=rate_h, rate_U2=rate_U2, rate_V2=rate_V2,
        exp_h=exp_h, exp_U2=exp_U2, exp_V2=exp_V2,
        window_t=ts, theta_rate_t=td, theta_rate=thd * dd,
        theta_rate_quadratic=2.0 * thd * np.sin(0.5 * dd) ** 2)
