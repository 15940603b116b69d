"""Sensorless state estimation and control for magnetic levitation systems.

Simulates 1-dof and 2-dof levitation plants driven only by voltage and
current measurements: an open-loop flux integrator turns flux observation
into constant-parameter estimation, a regressor-extension/mixing step
estimates those constants with per-element monotone errors, nonlinear
observers recover speed and position, and full-state control laws
(energy shaping for 2-dof, feedback linearization for 1-dof) close the
loop on the estimates.
"""

from .plant import PlantParams
from .config import ScenarioConfig, ValidationError
from .harness import RunRecord, run_scenario, run_many, metrics, emit_csv, emit_plots, NumericFailure
from .presets import get_preset, list_presets

__all__ = [
    "PlantParams",
    "ScenarioConfig",
    "ValidationError",
    "RunRecord",
    "run_scenario",
    "run_many",
    "metrics",
    "emit_csv",
    "emit_plots",
    "NumericFailure",
    "get_preset",
    "list_presets",
]

__version__ = "0.1.0"
