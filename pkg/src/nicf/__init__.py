"""Nearest-integer continued fraction maps, their transfer operators and GKL decay."""
from ._backend import BACKEND
from .maps import (
    GOLDEN,
    AdmissibilityError,
    DigitSequence,
    DomainError,
    MapKind,
    NicfDigit,
    apply_map,
    conjugate_J,
    conjugate_J_inverse,
    expand,
    reconstruct,
)
from .measures import DensityKind, IntervalUnion, density, measure, preimage_measure
from .chebyshev import SampledFunction
from .transfer import CONJUGATE_U, FOLDED_U, TruncationError, WeightFamily, apply_U

__all__ = [
    "BACKEND", "GOLDEN", "AdmissibilityError", "DigitSequence", "DomainError", "MapKind",
    "NicfDigit", "apply_map", "conjugate_J", "conjugate_J_inverse", "expand", "reconstruct",
    "DensityKind", "IntervalUnion", "density", "measure", "preimage_measure",
    "SampledFunction", "CONJUGATE_U", "FOLDED_U", "TruncationError", "WeightFamily", "apply_U",
]
__version__ = "0.1.0"
