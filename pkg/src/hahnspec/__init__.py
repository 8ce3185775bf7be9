"""Exact spectral theory of self-adjoint operators on c0 over Q((t))."""

from .diagonalize import DiagResult, SymSeriesMatrix, diagonalize, verify
from .errors import HahnSpecError
from .linalg import VectorC0, gram_schmidt, inner, volume
from .operators import OperatorC0, apply, op_norm_val
from .scalars import DEFAULT_PRECISION, INFINITE, FactorSet, LaurentSeries, Unknown
from .spectral import spectral_decompose
from .textfmt import format_series, parse_series

__all__ = [
    "DEFAULT_PRECISION",
    "INFINITE",
    "DiagResult",
    "FactorSet",
    "HahnSpecError",
    "LaurentSeries",
    "OperatorC0",
    "SymSeriesMatrix",
    "Unknown",
    "VectorC0",
    "apply",
    "diagonalize",
    "format_series",
    "gram_schmidt",
    "inner",
    "op_norm_val",
    "parse_series",
    "spectral_decompose",
    "verify",
    "volume",
]
