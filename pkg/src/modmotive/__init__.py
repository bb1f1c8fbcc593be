"""Noncommutative modular symbols and Hecke operators on truncated group algebras of Gamma(n)."""

from .modular_group import GL2Matrix, CuspPoint, GroupPresentation, presentation, word_problem
from .truncated_algebra import AlgebraModel, AlgebraElement, build_model
from .hecke import HeckeKind, HeckeMatrix, hecke_operator, hecke_components
from .periods import QExpansion, NumericValue, PathSpec

__version__ = "0.1.0"

__all__ = [
    "GL2Matrix",
    "CuspPoint",
    "GroupPresentation",
    "presentation",
    "word_problem",
    "AlgebraModel",
    "AlgebraElement",
    "build_model",
    "HeckeKind",
    "HeckeMatrix",
    "hecke_operator",
    "hecke_components",
    "QExpansion",
    "NumericValue",
    "PathSpec",
]
