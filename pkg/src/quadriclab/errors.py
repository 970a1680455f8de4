"""Exception hierarchy shared by all quadriclab modules."""


class QuadriclabError(Exception):
    """Base class for all structured errors raised by this package."""


# --- matrix validation ------------------------------------------------------

class MatrixValidationError(QuadriclabError):
    pass


class NotSkewSymmetric(MatrixValidationError):
    pass


class ZeroRowOrColumn(MatrixValidationError):
    pass


class BadEntryValue(MatrixValidationError):
    pass


class TooSmall(MatrixValidationError):
    pass


class NotIrreducible(QuadriclabError):
    pass


class NoNonzeroInFirstRow(QuadriclabError):
    """Defensive: cannot happen for a validated irreducible matrix."""


class DimensionMismatch(QuadriclabError):
    pass


class AnchorNotAdmissible(QuadriclabError):
    pass


class ChainNotFound(QuadriclabError):
    """No layer chain exists; signals a bug or non-irreducible input."""


class WitnessDegenerate(QuadriclabError):
    """The scanned free parameter never made the target polynomial nonzero."""


# --- finite field -----------------------------------------------------------

class NotPrime(QuadriclabError):
    pass


class AnchorNotAdmissibleModP(QuadriclabError):
    pass


class InsufficientPrimes(QuadriclabError):
    pass


class DegenerateCounts(QuadriclabError):
    """A point count collapsed (<= 1) or an equation vanished mod p."""


class PrimeTooSmall(QuadriclabError):
    """p <= 2M: the box-to-F_p embedding is not injective by this argument."""


# --- lattice / sums ---------------------------------------------------------

class BudgetExceeded(QuadriclabError):
    pass


class TailNotControllable(QuadriclabError):
    """Decay metadata too weak to certify the requested truncation error."""


class NotDifferentiableEnough(QuadriclabError):
    pass


# --- quadrature / kinetics --------------------------------------------------

class DecayTooWeak(QuadriclabError):
    pass


class QuadratureNotConverged(QuadriclabError):
    pass


class RangeViolation(QuadriclabError):
    """A computed value left its mathematically guaranteed range."""


class StepUnstable(QuadriclabError):
    pass


class NegativeSpectrum(QuadriclabError):
    pass


class InterpolationOutOfRange(QuadriclabError):
    pass


class ScientificAssertionError(QuadriclabError):
    """A hard mathematical bound was violated by computed data (exit code 1)."""
