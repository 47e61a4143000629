"""Overlap counting, cut-and-project sets and equidistribution diagnostics
for Bernoulli convolutions with hyperbolic algebraic parameters."""

from .errors import BernoulliOverlapsError
from .numberfield import (
                          QUARTIC,
                          ConjugateSystem,
                          Membership,
                          MinimalPolynomial,
                          ZBeta,
                          find_and_classify,
                          parse_polynomial,
                          system_from_coeffs,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliOverlapsError", "ConjugateSystem", "Membership", "MinimalPolynomial", "QUARTIC",
    "ZBeta", "find_and_classify", "parse_polynomial", "system_from_coeffs",
]
