"""Integrated quantiles: layer integrals, their empirical estimators,
risk measures, L-functionals, time-series inference and simulation tools."""
from .dist import (
    Distribution,
    GappedUniform,
    Logistic,
    Mixture,
    Normal,
    ParetoI,
    Sample,
    StepCDF,
    Uniform,
    make_dist,
)
from .errors import (
    DegenerateMeanError,
    DivergenceError,
    DomainError,
    IntQuantError,
    UnboundedQuantileError,
)
from .layers import LayerSpec, empirical_layer, layer_integral, remainder, verify_decomposition

__version__ = "0.1.0"

__all__ = [
    "Distribution", "GappedUniform", "Logistic", "Mixture", "Normal", "ParetoI", "Sample",
    "StepCDF", "Uniform", "make_dist", "DegenerateMeanError", "DivergenceError", "DomainError",
    "IntQuantError", "UnboundedQuantileError", "LayerSpec", "empirical_layer", "layer_integral",
    "remainder", "verify_decomposition",
]
