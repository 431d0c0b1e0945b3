"""Numerical laboratory for projections of fractal measures.

Frostman measures, Riesz energies and amplitudes, complex-order Riesz
potentials, Grassmannian Monte Carlo for mixed projection norms, and the
closed-form exponent thresholds for radial projections.
"""
from . import errors, exponents, grassmann, kernels, measures, potentials, projections
from ._parallel import get_threads, set_threads, threads
from .errors import ConfigError, DegeneracyError, FrostlabError, PoleError, PreconditionError

__version__ = "0.1.0"

__all__ = [
    "errors", "exponents", "grassmann", "kernels", "measures", "potentials", "projections",
    "get_threads", "set_threads", "threads",
    "ConfigError", "DegeneracyError", "FrostlabError", "PoleError", "PreconditionError",
]
