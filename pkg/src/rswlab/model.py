"""Domain types shared by every solver: states, grids, schemes, scenario
configuration with validation, and the named initial-data profiles.

All state objects are immutable after construction (arrays are marked
read-only), so they can be copied freely between workers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np



class ConfigError(ValueError):
    """Raised by validate_config; carries the full list of violations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ProfileError(ValueError):
    pass


def bump(s):
    """Smooth compactly supported bump (1 - s^2)^4 on |s| < 1, else 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = (1.0 - s[inside] ** 2) ** 4
    return out


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


# ---------------------------------------------------------------------------
# separated-variable reduction state and regime classification record
# ---------------------------------------------------------------------------

EQUILIBRIUM = "equilibrium"
PERIODIC = "periodic"
EXPLICIT_TAN = "explicit-tan"
BLOWUP = "blowup"

_REGIME_TAGS = (EQUILIBRIUM, PERIODIC, EXPLICIT_TAN, BLOWUP)


@dataclass(frozen=True)
class SeparatedState:
    """Reduced state (g, xi, eta) of the separated-variable flow.

    g is the dimensionless log-shift of the angular velocity profile,
    xi = dg/dt and eta = d^2g/dt^2.
    """

    t: float
    g: float
    xi: float
    eta: float

    def __post_init__(self):
        vals = (self.t, self.g, self.xi, self.eta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("separated state must be finite: %r" % (vals,))

    @property
    def theta(self) -> float:
        return self.xi * self.xi + 1.0 - self.eta


@dataclass(frozen=True)
class Regime:
    """Classification of a separated-flow initial point.

    tag is one of equilibrium / periodic / explicit-tan / blowup.  kappa0 is
    the conserved phase invariant (absent on the explicit-tan branch where
    theta vanishes identically), t_blowup the finite blowup time for the two
    singular regimes, and period the 2*pi recurrence time of periodic orbits.
    """

    tag: str
    kappa0: Optional[float] = None
    t_blowup: Optional[float] = None
    period: Optional[float] = None

    def __post_init__(self):
        if self.tag not in _REGIME_TAGS:
            raise ValueError("unknown regime tag %r" % (self.tag,))
        if self.tag == PERIODIC:
            if self.kappa0 is None or not (0.0 < self.kappa0 < 1.0):
                raise ValueError("periodic regime requires kappa0 in (0, 1)")
            if self.period is None:
                raise ValueError("periodic regime requires a period")
        if self.tag == EQUILIBRIUM and self.kappa0 != 1.0:
            raise ValueError("equilibrium regime requires kappa0 = 1")
        if self.tag == BLOWUP:
            if self.kappa0 is None or self.kappa0 > 0.0:
                raise ValueError("blowup regime requires kappa0 <= 0")
            if self.t_blowup is None:
                raise ValueError("blowup regime requires t_blowup")
        if self.tag == EXPLICIT_TAN and self.t_blowup is None:
            raise ValueError("explicit-tan regime requires t_blowup")

    def to_dict(self) -> dict:
        d = {"tag": self.tag}
        for k in ("kappa0", "t_blowup", "period"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        return d


# ---------------------------------------------------------------------------
# grids and solver states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    """Uniform cell-centered grid on (r_min, r_max); first center at dr/2
    above r_min so 1/r source terms are always finite."""

    n: int
    r_max: float
    r_min: float = 0.0

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / self.n

    def centers(self) -> np.ndarray:
        return self.r_min + (np.arange(self.n) + 0.5) * self.dr

    def interfaces(self) -> np.ndarray:
        return self.r_min + np.arange(self.n + 1) * self.dr


@dataclass(frozen=True)
class RadialState:
    """Cell-centered radial fields (h, U, V) with far-field depth h_bar."""

    r: np.ndarray
    h: np.ndarray
    U: np.ndarray
    V: np.ndarray
    h_bar: float
    t: float = 0.0

    def __post_init__(self):
        _freeze(self.r, self.h, self.U, self.V)

    def check(self):
        n = self.r.size
        if not (self.h.size == self.U.size == self.V.size == n):
            raise ValueError("field arrays must share the grid length")
        if np.any(np.diff(self.r) <= 0) or np.any(self.r <= 0):
            raise ValueError("radial centers must be positive and increasing")
        if self.h_bar <= 0:
            raise ValueError("h_bar must be positive")
        if np.any(self.h < 0):
            raise ValueError("depth must be non-negative")
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.U))
                and np.all(np.isfinite(self.V))):
            raise ValueError("fields must be finite")
        return self


@dataclass(frozen=True)
class PlanarGrid:
    """Square cell-centered Cartesian grid centered on the origin."""

    nx: int
    ny: int
    x_half: float
    y_half: float

    @property
    def dx(self) -> float:
        return 2.0 * self.x_half / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * self.y_half / self.ny

    def centers(self):
        x = -self.x_half + (np.arange(self.nx) + 0.5) * self.dx
        y = -self.y_half + (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="xy")


@dataclass(frozen=True)
class PlanarState:
    """Conservative planar fields (h, hu, hv) on a Cartesian grid."""

    grid: PlanarGrid
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray
    h_bar: float
    t: float = 0.0

    def __post_init__(self):
        _freeze(self.h, self.hu, self.hv)

    @property
    def u(self) -> np.ndarray:
        return self.hu / self.h

    @property
    def v(self) -> np.ndarray:
        return self.hv / self.h

    def check(self):
        shape = (self.grid.ny, self.grid.nx)
        if not (self.h.shape == self.hu.shape == self.hv.shape == shape):
            raise ValueError("planar fields must have shape (ny, nx)")
        if self.h_bar <= 0:
            raise ValueError("h_bar must be positive")
        if np.any(self.h < 0):
            raise ValueError("depth must be non-negative")
        if not all(np.all(np.isfinite(a)) for a in (self.h, self.hu, self.hv)):
            raise ValueError("fields must be finite")
        return self


# ---------------------------------------------------------------------------
# moment functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSet:
    """Moment functionals of a state: radial moment P1, angular moment P2,
    energy E, mass excess m, and the phase constants (p, q) of their linear
    evolution P1' = E + P2, P2' = -P1.

    Matching the closed form at t = 0 forces p = E + P2 and q = P1.
    """

    P1: float
    P2: float
    E: float
    m: float
    p: float
    q: float

    @classmethod
    def from_values(cls, P1, P2, E, m) -> "MomentSet":
        return cls(P1=P1, P2=P2, E=E, m=m, p=E + P2, q=P1)


@dataclass
class RunRecord:
    """Time-stamped diagnostics of one run plus scheme metadata.

    rows hold one dict per output time (t, dt, moments, max_grad, drifts);
    states optionally hold full stored states; blowup carries the detection
    report when termination is blowup-detected.
    """

    config: dict
    termination: str = "horizon"
    rows: list = field(default_factory=list)
    states: list = field(default_factory=list)
    blowup: Optional[dict] = None
    profile: Optional[dict] = None

    def add_row(self, t, dt, moments, max_grad, drifts):
        if self.rows and t <= self.rows[-1]["t"]:
            raise ValueError("output times must be strictly increasing")
        self.rows.append({"t": t, "dt": dt, "moments": moments,
                          "max_grad": max_grad, "drifts": drifts})

    @property
    def times(self) -> np.ndarray:
        return np.array([row["t"] for row in self.rows])

    def moment_series(self, name: str) -> np.ndarray:
        return np.array([getattr(row["moments"], name) for row in self.rows])

    def check(self):
        if self.termination not in ("horizon", "blowup-detected", "error"):
            raise ValueError("unknown termination cause %r" % (self.termination,))
        t = self.times
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("output times must be strictly increasing")
        return self


# ---------------------------------------------------------------------------
# scheme options and scenario configuration
# ---------------------------------------------------------------------------

FLUX_KINDS = ("llf", "hll")


@dataclass(frozen=True)
class Scheme:
    """Finite-volume scheme options shared by the radial and planar solvers.

    Blowup detection fires when any primitive gradient exceeds grad_factor
    times the initial maximum (floored at 1), when a single-cell jump of any
    field exceeds jump_frac times the initial field scale (a shock-capturing
    scheme caps gradients near jump/dr, so a pure gradient factor cannot
    fire on data that starts steep), when dt falls below dt_floor, or when a
    non-finite value appears.
    """

    flux: str = "llf"
    order: int = 2
    cfl: float = 0.4
    grad_factor: float = 1e3
    jump_frac: float = 0.25
    dt_floor: float = 1e-9

    def check_errors(self):
        errs = []
        if self.flux not in FLUX_KINDS:
            errs.append("unknown flux kind %r (choose llf or hll)" % (self.flux,))
        if self.order not in (1, 2):
            errs.append("reconstruction order must be 1 or 2")
        if not (0.0 < self.cfl <= 1.0):
            errs.append("cfl must lie in (0, 1], got %g" % self.cfl)
        if self.grad_factor <= 0:
            errs.append("grad_factor must be positive")
        if self.jump_frac <= 0:
            errs.append("jump_frac must be positive")
        if self.dt_floor <= 0:
            errs.append("dt_floor must be positive")
        return errs


KNOWN_PROFILES = {
    "separated": ("trace",),
    "radial": ("rest", "h_bump", "inward_bump", "separated_trace"),
    "planar": ("rest", "h_bump", "swirl_bump"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated description of one run; serializes to/from JSON."""

    kind: str
    initial: dict
    grid: dict
    h_bar: float = 1.0
    horizon: float = 1.0
    scheme: Scheme = field(default_factory=Scheme)
    output_interval: Optional[float] = None
    store_states: bool = False
    store_every: int = 1
    tol: float = 1e-10

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "initial": dict(self.initial),
            "grid": dict(self.grid),
            "h_bar": self.h_bar,
            "horizon": self.horizon,
            "solver": asdict(self.scheme),
            "output": {
                "interval": self.output_interval,
                "store_states": self.store_states,
                "store_every": self.store_every,
            },
            "tol": self.tol,
        }
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        solver = d.get("solver", {})
        output = d.get("output", {})
        return cls(
            kind=d.get("kind", ""),
            initial=dict(d.get("initial", {})),
            grid=dict(d.get("grid", {})),
            h_bar=float(d.get("h_bar", 1.0)),
            horizon=float(d.get("horizon", 1.0)),
            scheme=Scheme(
                flux=solver.get("flux", "llf"),
                order=int(solver.get("order", 2)),
                cfl=float(solver.get("cfl", 0.4)),
                grad_factor=float(solver.get("grad_factor", 1e3)),
                jump_frac=float(solver.get("jump_frac", 0.25)),
                dt_floor=float(solver.get("dt_floor", 1e-9)),
            ),
            output_interval=output.get("interval"),
            store_states=bool(output.get("store_states", False)),
            store_every=int(output.get("store_every", 1)),
            tol=float(d.get("tol", 1e-10)),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))


def support_radius(kind: str, initial: dict) -> float:
    """Outer radius of the initial perturbation support (0 for rest)."""
    profile = initial.get("profile", "rest")
    if profile == "rest":
        return 0.0
    if kind == "radial":
        if profile == "h_bump":
            return float(initial["center"]) + float(initial["width"])
        if profile == "inward_bump":
            return float(initial["r_hi"])
        if profile == "separated_trace":
            return math.inf  # unbounded support; needs trace boundaries
    if kind == "planar":
        off = math.hypot(float(initial.get("cx", 0.0)), float(initial.get("cy", 0.0)))
        return off + float(initial["width"])
    raise ProfileError("unknown profile %r for kind %r" % (profile, kind))


def validate_config(cfg) -> ScenarioConfig:
    """Validate and normalize a ScenarioConfig (or raw dict).

    Raises ConfigError listing every violated constraint; on success returns
    a normalized config with defaults filled.  Deterministic.
    """
    if isinstance(cfg, dict):
        cfg = ScenarioConfig.from_dict(cfg)
    errs: list[str] = []

    if cfg.kind not in KNOWN_PROFILES:
        errs.append("unknown scenario kind %r" % (cfg.kind,))
        raise ConfigError(errs)

    profile = cfg.initial.get("profile", "rest")
    if profile not in KNOWN_PROFILES[cfg.kind]:
        errs.append("unknown profile name %r for kind %r" % (profile, cfg.kind))

    if cfg.h_bar <= 0:
        errs.append("h_bar must be positive")
    if cfg.horizon <= 0:
        errs.append("horizon must be positive")
    if cfg.tol <= 0:
        errs.append("tol must be positive")
    errs.extend(cfg.scheme.check_errors())

    sigma = math.sqrt(cfg.h_bar) if cfg.h_bar > 0 else 0.0

    if cfg.kind == "radial":
        n = int(cfg.grid.get("n", 0))
        r_min = float(cfg.grid.get("r_min", 0.0))
        r_max = float(cfg.grid.get("r_max", 0.0))
        if n < 8:
            errs.append("radial grid needs n >= 8 cells")
        if r_max <= r_min or r_min < 0:
            errs.append("grid not increasing: need 0 <= r_min < r_max")
        elif profile in ("h_bump", "inward_bump") and not errs:
            dr = (r_max - r_min) / n
            R = support_radius("radial", cfg.initial)
            lo = (float(cfg.initial["center"]) - float(cfg.initial["width"])
                  if profile == "h_bump" else float(cfg.initial["r_lo"]))
            if lo <= r_min:
                errs.append("perturbation support touches the inner boundary")
            if R + sigma * cfg.horizon > r_max - 3 * dr:
                errs.append(
                    "support cone R + sqrt(h_bar)*horizon = %.4g exceeds the "
                    "domain; enlarge r_max" % (R + sigma * cfg.horizon,))
    elif cfg.kind == "planar":
        nx = int(cfg.grid.get("nx", 0))
        ny = int(cfg.grid.get("ny", 0))
        x_half = float(cfg.grid.get("x_half", 0.0))
        y_half = float(cfg.grid.get("y_half", 0.0))
        if nx < 16 or ny < 16:
            errs.append("planar grid needs nx, ny >= 16")
        if x_half <= 0 or y_half <= 0:
            errs.append("planar half-widths must be positive")
        elif profile != "rest" and not errs:
            dx = 2.0 * x_half / nx
            R = support_radius("planar", cfg.initial)
            if R + sigma * cfg.horizon > min(x_half, y_half) - 3 * dx:
                errs.append(
                    "support cone R + sqrt(h_bar)*horizon = %.4g reaches the "
                    "far-field ring; enlarge the domain or shrink horizon"
                    % (R + sigma * cfg.horizon,))

    if errs:
        raise ConfigError(errs)

    interval = cfg.output_interval
    if interval is None or interval <= 0:
        interval = cfg.horizon / 50.0
    return ScenarioConfig(
        kind=cfg.kind, initial=dict(cfg.initial), grid=dict(cfg.grid),
        h_bar=cfg.h_bar, horizon=cfg.horizon, scheme=cfg.scheme,
        output_interval=interval, store_states=cfg.store_states,
        store_every=max(1, cfg.store_every), tol=cfg.tol)


# ---------------------------------------------------------------------------
# named initial-data profiles
# ---------------------------------------------------------------------------

def build_initial_radial(initial: dict, grid: RadialGrid, h_bar: float) -> RadialState:
    """Construct a RadialState from a named profile descriptor.

    Profiles: rest, h_bump (compact depth bump), inward_bump (non-positive
    radial velocity bump on [r_lo, r_hi], optional co-supported depth and
    angular bumps), separated_trace (separated solution sampled at t = 0).
    """
    r = grid.centers()
    profile = initial.get("profile", "rest")
    h = np.full_like(r, h_bar)
    U = np.zeros_like(r)
    V = np.zeros_like(r)

    if profile == "rest":
        pass
    elif profile == "h_bump":
        c, w, amp = (float(initial[k]) for k in ("center", "width", "amp"))
        if amp <= -h_bar:
            raise ProfileError("negative depth requested: amp <= -h_bar")
        _check_support_inside(c - w, c + w, grid)
        h = h + amp * bump((r - c) / w)
    elif profile == "inward_bump":
        lo, hi = float(initial["r_lo"]), float(initial["r_hi"])
        u_amp = float(initial["u_amp"])
        if u_amp < 0:
            raise ProfileError("u_amp must be >= 0 (bump is applied inward)")
        _check_support_inside(lo, hi, grid)
        c, w = 0.5 * (lo + hi), 0.5 * (hi - lo)
        shape = bump((r - c) / w)
        U = -u_amp * shape
        h_amp = float(initial.get("h_amp", 0.0))
        if h_amp <= -h_bar:
            raise ProfileError("negative depth requested: h_amp <= -h_bar")
        h = h + h_amp * shape
        V = float(initial.get("v_amp", 0.0)) * shape
    elif profile == "separated_trace":
        from . import separated  # local import; avoids a cycle at import time
        if int(initial.get("branch", 1)) != 1:
            # the V = r(-e^g - 1/2) family is out of scope
            raise ProfileError("only the positive angular branch is supported")
        g0 = float(initial.get("g0", 0.0))
        xi0, eta0 = float(initial["xi0"]), float(initial["eta0"])
        h, U, V = separated.reconstruct_fields((g0, xi0, eta0), r)
        if np.any(h < 0):
            raise ProfileError("separated trace has negative depth on the grid")
    else:
        raise ProfileError("unknown radial profile %r" % (profile,))

    return RadialState(r=r, h=h, U=U, V=V, h_bar=h_bar, t=0.0).check()


def _check_support_inside(lo, hi, grid: RadialGrid):
    if lo <= grid.r_min or hi >= grid.r_max - 2 * grid.dr:
        raise ProfileError(
            "perturbation support [%g, %g] must lie strictly inside the "
            "domain (%g, %g)" % (lo, hi, grid.r_min, grid.r_max))


def build_initial_planar(initial: dict, grid: PlanarGrid, h_bar: float) -> PlanarState:
    """Construct a PlanarState from a named profile descriptor.

    swirl_bump carries a compact depth bump plus a rigid-swirl velocity
    patch around an off-center point, so both moment components are excited.
    """
    X, Y = grid.centers()
    profile = initial.get("profile", "rest")
    h = np.full_like(X, h_bar)
    u = np.zeros_like(X)
    v = np.zeros_like(X)

    if profile == "rest":
        pass
    else:
        cx = float(initial.get("cx", 0.0))
        cy = float(initial.get("cy", 0.0))
        w = float(initial["width"])
        s = np.hypot(X - cx, Y - cy) / w
        shape = bump(s)
        if profile == "h_bump":
            amp = float(initial["amp"])
            if amp <= -h_bar:
                raise ProfileError("negative depth requested: amp <= -h_bar")
            h = h + amp * shape
        elif profile == "swirl_bump":
            h_amp = float(initial.get("h_amp", 0.0))
            if h_amp <= -h_bar:
                raise ProfileError("negative depth requested: h_amp <= -h_bar")
            omega = float(initial.get("omega", 0.0))
            h = h + h_amp * shape
            u = -omega * (Y - cy) * shape
            v = omega * (X - cx) * shape
        else:
            raise ProfileError("unknown planar profile %r" % (profile,))
        R = support_radius("planar", initial)
        if R >= min(grid.x_half, grid.y_half) - 2 * max(grid.dx, grid.dy):
            raise ProfileError("perturbation support touches the far-field ring")

    return PlanarState(grid=grid, h=h, hu=h * u, hv=h * v, h_bar=h_bar, t=0.0).check()


def profile_constants(state: RadialState) -> dict:
    """Sup/ L1 data of the initial radial velocity; the ratio is recorded for
    reproducibility but no profile family is rejected for its size."""
    dr = float(state.r[1] - state.r[0])
    u_linf = float(np.max(np.abs(state.U)))
    u_l1 = float(np.sum(np.abs(state.U)) * dr)
    return {
        "u_linf": u_linf,
        "u_l1": u_l1,
        "linf_l1_ratio": u_linf / u_l1 if u_l1 > 0 else math.inf,
    }
