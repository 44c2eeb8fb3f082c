"""Exception types shared across the library."""


class SelfAffineError(Exception):
    """Base class for all library errors."""


class DegenerateSystemError(SelfAffineError):
    """The IFS collapses to a one-dimensional subspace (or is within
    tolerance of doing so): zero eigenvalue, equal eigenvalues with a
    diagonalizable matrix, a real spectrum where a rotation was required,
    or a non-cyclic translation vector."""


class NotContractingError(SelfAffineError):
    """Spectral radius of the linear part is not strictly below 1."""


class CoefficientSumExceeded(SelfAffineError):
    """Digit-selection polynomial has coefficient sum above 2, so the
    greedy digit loop cannot keep residuals in [-1, 1]."""

    def __init__(self, coeff_sum: float, message: str = ""):
        self.coeff_sum = coeff_sum
        super().__init__(message or f"coefficient sum {coeff_sum:.9g} exceeds 2")


class ConditionsFailed(SelfAffineError):
    """One of the certificate conditions (root orders, coefficient sum,
    submatrix rank) does not hold for the given polynomial."""


class TargetOutsideDelta(SelfAffineError):
    """Requested target point lies outside the certified radius."""


class ResidualEscape(SelfAffineError):
    """A digit-loop residual left [-1, 1].  Unreachable when preconditions
    hold; raised defensively to flag a tolerance bug instead of silently
    emitting a bad address."""


class DegenerateParameters(SelfAffineError):
    """Hull construction called with parameters outside its proposition's
    hypotheses (e.g. equal contraction ratios where distinct ones are
    required)."""


class CannotSeparate(SelfAffineError):
    """Conservative cylinder bounds overlap, so the disjointness condition
    is inconclusive (not a disproof)."""


class SearchExhausted(SelfAffineError):
    """No certificate found within the requested search bounds (not a
    disproof)."""


class ViewportEmpty(SelfAffineError):
    """Raster viewport does not intersect the attractor bounding set."""
