"""Integers represented by binary quadratic forms, counted in arithmetic progressions."""

from .arith import build_tables, kronecker
from .constants import lsd_coefficients, two_term_estimate
from .errors import (
    DomainError,
    NumericError,
    PreconditionError,
    QFBiasError,
    ResourceError,
    UnsupportedDiscriminantError,
)
from .forms import QuadForm, class_group, genus_structure, reduce
from .repsieve import count_residues, rep_bitmap

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "NumericError",
    "PreconditionError",
    "QFBiasError",
    "QuadForm",
    "ResourceError",
    "UnsupportedDiscriminantError",
    "build_tables",
    "class_group",
    "count_residues",
    "genus_structure",
    "kronecker",
    "lsd_coefficients",
    "reduce",
    "rep_bitmap",
    "two_term_estimate",
]
