"""Adaptive explicit ODE integration and the SSP time stepper.

The integrator is a Dormand-Prince 5(4) embedded pair with a
proportional-integral step controller, cubic Hermite dense output, and
early termination on a caller-supplied escape predicate (the escape time is
localized by bisecting the dense output of the last accepted step).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Dormand-Prince 5(4) tableau; the propagating solution is 5th order, the
# embedded 4th order difference drives step control.  FSAL: the last stage
# of an accepted step is the first stage of the next one.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
       187 / 2100, 1 / 40)
_ERR = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

HORIZON = "horizon"
ESCAPE = "escape-threshold"
UNDERFLOW = "step-underflow"


@dataclass
class OdeSolution:
    """Accepted samples of one adaptive integration.

    t, y hold the sample times and states; f the state derivatives at those
    samples (used for cubic Hermite dense output).  termination is one of
    horizon / escape-threshold / step-underflow; for escapes the crossing
    time and state are stored in t_escape / y_escape.
    """

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    dt_history: np.ndarray
    n_accepted: int
    n_rejected: int
    termination: str
    t_escape: Optional[float] = None
    y_escape: Optional[np.ndarray] = None

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]

    def sample(self, t):
        """Cubic Hermite dense evaluation at time(s) t within the span."""
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        if tq.min() < self.t[0] - 1e-12 or tq.max() > self.t[-1] + 1e-12:
            raise ValueError("sample time outside the stored span")
        tq = np.clip(tq, self.t[0], self.t[-1])
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[idx], self.t[idx + 1]
        h = t1 - t0
        s = np.where(h > 0, (tq - t0) / np.where(h > 0, h, 1.0), 0.0)
        y0, y1 = self.y[idx], self.y[idx + 1]
        f0, f1 = self.f[idx], self.f[idx + 1]
        s = s[:, None]
        h = h[:, None]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        if np.isscalar(t) or np.ndim(t) == 0:
            return out[0]
        return out


def integrate_adaptive(rhs: Callable, y0, t_span, tol: float = 1e-10,
                       escape: Optional[Callable] = None,
                       max_steps: int = 200_000,
                       dt_min: float = 1e-14) -> OdeSolution:
    """Integrate y' = rhs(t, y) over t_span with local error ~ tol.

    Stops early when escape(y) becomes true, bisecting the dense output of
    the bracketing step to localize the crossing time to within tol.  Step
    size underflow is reported as a termination cause, not an error.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0, t_end = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    if y.ndim != 1:
        raise ValueError("y0 must be one-dimensional")

    ts = [t0]
    ys = [y.copy()]
    k1 = np.asarray(rhs(t0, y), dtype=float)
    fs = [k1.copy()]
    dts: list[float] = []
    n_acc = n_rej = 0
    termination = HORIZON
    t_escape = None
    y_escape = None

    if escape is not None and escape(y):
        return OdeSolution(np.array(ts), np.array(ys), np.array(fs),
                           np.array(dts), 0, 0, ESCAPE, t0, y.copy())

    # initial step from the scale of y and y'; floored at a fraction of the
    # span so a near-zero initial state cannot fake an instant underflow
    # (the controller grows an undersized step geometrically anyway)
    span = abs(t_end - t0)
    scale = tol + tol * np.abs(y)
    d0 = math.sqrt(float(np.mean((y / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((k1 / scale) ** 2)))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * span
    h = min(max(h, 1e-9 * span), span)

    t = t0
    err_prev = 1.0
    k = [np.zeros_like(y) for _ in range(7)]
    k[0] = k1

    while t < t_end:
        if n_acc + n_rej >= max_steps:
            raise RuntimeError("step budget %d exhausted at t = %g"
                               % (max_steps, t))
        h = min(h, t_end - t)
        if h < dt_min:
            termination = UNDERFLOW
            break
        for i in range(1, 7):
            yi = y.copy()
            for j, a in enumerate(_A[i]):
                if a != 0.0:
                    yi += (h * a) * k[j]
            k[i] = np.asarray(rhs(t + _C[i] * h, yi), dtype=float)
        y_new = yi  # stage 7 uses the 5th-order weights, so yi is the update
        err_vec = np.zeros_like(y)
        for j, e in enumerate(_ERR):
            if e != 0.0:
                err_vec += e * k[j]
        err_vec *= h
        sc = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
        if not math.isfinite(err):
            err = 10.0

        if err <= 1.0:
            t_new = t + h
            ts.append(t_new)
            ys.append(y_new.copy())
            fs.append(k[6].copy())
            dts.append(h)
            n_acc += 1
            if escape is not None and escape(y_new):
                termination = ESCAPE
                t_escape, _ = _bisect_escape(
                    t, y, k[0], t_new, y_new, k[6], escape, tol)
                # replace the overshooting sample with the state integrated
                # to the crossing time, so the stored span ends at threshold
                if t_escape > t + 1e-15:
                    inner = integrate_adaptive(rhs, y, (t, t_escape), tol=tol,
                                               max_steps=10_000, dt_min=dt_min)
                    y_escape = inner.y_end.copy()
                else:
                    y_escape = y.copy()
                ts[-1] = t_escape
                ys[-1] = y_escape.copy()
                fs[-1] = np.asarray(rhs(t_escape, y_escape), dtype=float)
                dts[-1] = t_escape - t
                break
            y = y_new
            t = t_new
            k[0] = k[6]  # FSAL
            err = max(err, 1e-16)
            fac = 0.9 * err ** -0.14 * err_prev ** 0.08
            err_prev = err
            h *= min(5.0, max(0.2, fac))
        else:
            n_rej += 1
            h *= min(1.0, max(0.2, 0.9 * err ** -0.2))

    sol = OdeSolution(
        t=np.array(ts), y=np.array(ys), f=np.array(fs),
        dt_history=np.array(dts), n_accepted=n_acc, n_rejected=n_rej,
        termination=termination, t_escape=t_escape, y_escape=y_escape)
    return sol


def _bisect_escape(t0, y0, f0, t1, y1, f1, escape, tol):
    """Bisect the Hermite interpolant of one step for the escape crossing."""

    def interp(t):
        s = (t - t0) / (t1 - t0)
        h = t1 - t0
        return ((1 + 2 * s) * (1 - s) ** 2 * y0 + s * (1 - s) ** 2 * h * f0
                + s * s * (3 - 2 * s) * y1 + s * s * (s - 1) * h * f1)

    lo, hi = t0, t1
    width_goal = max(tol, 1e-13 * max(1.0, abs(t1)))
    for _ in range(200):
        if hi - lo <= width_goal:
            break
        mid = 0.5 * (lo + hi)
        if escape(interp(mid)):
            hi = mid
        else:
            lo = mid
    return hi, interp(hi)


def ssp_step(advance: Callable, y, t: float, dt: float):
    """One second-order strong-stability-preserving (Heun) step.

    advance(y, t) returns the semidiscrete time derivative.  Convex
    combination of two Euler stages, so any affine invariant preserved by
    the stage operator is preserved exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    y1 = y + dt * advance(y, t)
    return 0.5 * (y + y1 + dt * advance(y1, t + dt))
