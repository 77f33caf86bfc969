"""Adaptive feedback communication link with a saturating PAM modulator.

Closed-form MSE, threshold, rate and energy results, a vectorised Monte Carlo
simulator and a small command-line front end.
"""

from .errors import DegenerateConfigurationError, DomainError
from .gaussian import RngStream, phi, saturation_factor
from .model import DerivedParams, SystemParams, derive_params
from .presets import preset_catalog
from .simulation import run_batch, forced_corruption_experiment

__all__ = [
    "DegenerateConfigurationError", "DomainError", "RngStream", "phi", "saturation_factor",
    "DerivedParams", "SystemParams", "derive_params", "preset_catalog", "run_batch",
    "forced_corruption_experiment",
]
