"""Numerics for the Bessel measure, the Bessel Riesz transform kernel,
BMO/CMO oscillation functionals and commutator compactness diagnostics."""

__version__ = "0.1.0"

from .errors import (
    AssemblyError,
    BesselError,
    ConfigurationError,
    DegenerateSymbolError,
    InfiniteNormError,
    InvalidArgumentError,
    NumericalError,
    QuadratureAccuracyError,
    SingularPointError,
)
from .funcspace import GridFunction
from .kernel import KernelConfig, kernel_batch, kernel_eval
from .measure import Interval, interval_make, measure
from .operators import OperatorMatrix, TruncationSpec

__all__ = [
    "__version__",
    "AssemblyError",
    "BesselError",
    "ConfigurationError",
    "DegenerateSymbolError",
    "InfiniteNormError",
    "InvalidArgumentError",
    "NumericalError",
    "QuadratureAccuracyError",
    "SingularPointError",
    "GridFunction",
    "Interval",
    "KernelConfig",
    "OperatorMatrix",
    "TruncationSpec",
    "interval_make",
    "kernel_batch",
    "kernel_eval",
    "measure",
]
