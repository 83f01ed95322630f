"""Precision-matrix entry estimation, confidence intervals and ANT support recovery."""

from ._backend import BACKEND
from .errors import (
    DegenerateResidual,
    DomainError,
    NoConvergence,
    NotPositiveDefinite,
    RankDeficientSupport,
    SingularPair,
    ZeroColumn,
)
from .numkit import DataMatrix

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DataMatrix",
    "DegenerateResidual",
    "DomainError",
    "NoConvergence",
    "NotPositiveDefinite",
    "RankDeficientSupport",
    "SingularPair",
    "ZeroColumn",
]
