"""Exception hierarchy.

Every error class carries the process exit code the CLI uses for it, so
callers can map failures to codes without a lookup table.
"""


class BernoulliOverlapsError(Exception):
    exit_code = 1


class ConfigError(BernoulliOverlapsError):
    exit_code = 2


# --- polynomial / conjugate validation -------------------------------------

class PolynomialError(BernoulliOverlapsError):
    exit_code = 10


class NotMonic(PolynomialError):
    exit_code = 11


class NoRootInUnitInterval(PolynomialError):
    """No real root in the open interval (1, 2)."""
    exit_code = 12


class NumericallyDegenerateRoots(PolynomialError):
    exit_code = 13


class NonHyperbolic(PolynomialError):
    exit_code = 14


class NoAdmissibleFreeDirection(PolynomialError):
    exit_code = 15


# --- resource / window problems ---------------------------------------------

class ResourceLimit(BernoulliOverlapsError):
    exit_code = 20


class BoundTooSmall(BernoulliOverlapsError):
    exit_code = 21


class WindowTooSmall(BernoulliOverlapsError):
    exit_code = 22


class WindowExhausted(BernoulliOverlapsError):
    exit_code = 23


# --- numerical / structural failures ----------------------------------------

class NoConvergence(BernoulliOverlapsError):
    exit_code = 30


class UnsupportedDimension(BernoulliOverlapsError):
    exit_code = 31


class MissingWeight(BernoulliOverlapsError):
    exit_code = 32


class InsufficientSamples(BernoulliOverlapsError):
    exit_code = 33


class BoundMismatch(BernoulliOverlapsError):
    exit_code = 34


class EmptyMeasure(BernoulliOverlapsError):
    exit_code = 35


class UnstablePieceCount(BernoulliOverlapsError):
    """Raised only on request; by default the instability is reported."""
    exit_code = 36
