"""Logarithmic pencils of flat connections on hyperplane arrangement complements."""

from .algebra import ParamLinearMatrix, RationalFunction, MultiPoly, parse_rational_function
from .pencil import Arrangement, Hyperplane, LogPencil, check_flatness_points, check_flatness_residue
from .families import (
    FamilySpec,
    RationalMatrixFunction,
    build_dunkl,
    build_exshift,
    build_exshift_shift,
    build_tensor_kz,
    build_verma_kz,
    build_verma_kz_shift,
    parse_family,
)

__version__ = "0.1.0"

__all__ = [
    "Arrangement",
    "FamilySpec",
    "Hyperplane",
    "LogPencil",
    "MultiPoly",
    "ParamLinearMatrix",
    "RationalFunction",
    "RationalMatrixFunction",
    "build_dunkl",
    "build_exshift",
    "build_exshift_shift",
    "build_tensor_kz",
    "build_verma_kz",
    "build_verma_kz_shift",
    "check_flatness_points",
    "check_flatness_residue",
    "parse_family",
    "parse_rational_function",
]
