"""Exact polynomial kernel: rationals, polynomials, parsing, integration, matrices."""
from .homotopy import NotClosed, gradient, homotopy_integrate_oneform, integrate_hessian
from .linalg import RationalMatrix, Singular, determinant, invert_matrix, matrix_rank
from .parser import ParseError, UnknownVariable, parse_polynomial
from .polynomial import PARAMS, Chart, Polynomial, Rational, rational, serialize


def diff(p: Polynomial, index: int) -> Polynomial:
    """Exact partial derivative with respect to ``x^(index+1)``."""
    return p.diff(index)


__all__ = [
    "PARAMS", "Chart", "NotClosed", "ParseError", "Polynomial", "Rational", "RationalMatrix",
    "Singular", "UnknownVariable", "determinant", "diff", "gradient", "homotopy_integrate_oneform",
    "integrate_hessian", "invert_matrix", "matrix_rank", "parse_polynomial", "rational", "serialize",
]
