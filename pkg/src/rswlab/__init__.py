"""Numerical laboratory for finite-time blowup diagnostics of the rotating
shallow water system: moment functionals and their blowup criterion, radial
and planar finite-volume solvers, and the separated-variable reduction with
its periodic / blowup classification."""

from .model import (MomentSet, PlanarGrid, PlanarState, RadialGrid,
                    RadialState, Regime, RunRecord, ScenarioConfig, Scheme,
                    SeparatedState, build_initial_planar, build_initial_radial,
                    validate_config)
from .separated import (blowup_rates, blowup_time, classify, kappa,
                        particle_path, period_integral, reconstruct_fields,
                        theta, trace)

__version__ = "0.1.0"

__all__ = [
    "MomentSet", "PlanarGrid", "PlanarState", "RadialGrid", "RadialState",
    "Regime", "RunRecord", "ScenarioConfig", "Scheme", "SeparatedState",
    "build_initial_planar", "build_initial_radial", "validate_config",
    "blowup_rates", "blowup_time", "classify", "kappa", "particle_path",
    "period_integral", "reconstruct_fields", "theta", "trace",
    "__version__",
]
