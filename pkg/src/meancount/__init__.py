"""Mean counting functions, Jessen functions and zero sets of Dirichlet series."""

from .dirichlet import (
    DEFAULT_SPEC,
    DirichletPolynomial,
    QuadratureSpec,
    SymbolG0,
    compose,
    constant_symbol,
    validate_symbol,
)
from .errors import MeanCountError
from .ladder import LadderSpec

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SPEC",
    "DirichletPolynomial",
    "LadderSpec",
    "MeanCountError",
    "QuadratureSpec",
    "SymbolG0",
    "compose",
    "constant_symbol",
    "validate_symbol",
]
