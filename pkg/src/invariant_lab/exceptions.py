"""Exception hierarchy shared by every module."""


class InvariantLabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(InvariantLabError, ValueError):
    """An input violates a type invariant (normalization, hermiticity, ...)."""


class DimensionMismatchError(ValidationError):
    pass


class ConsistencyError(InvariantLabError):
    """Two independent evaluation routes disagree beyond tolerance."""


class UnbiasedPairViolation(InvariantLabError, ValueError):
    def __init__(self, i, f, magnitude):
        self.i, self.f, self.magnitude = i, f, magnitude
        super().__init__(
            f"unbiased-pair violation: |<i|f>| = {magnitude:.3e} at (i={i}, f={f})"
        )


class UndefinedWeakValueError(InvariantLabError, ValueError):
    pass


class VanishingPostSelectionError(InvariantLabError, ValueError):
    pass


class PostSelectionStarvedError(InvariantLabError):
    pass


class NoDataError(InvariantLabError):
    pass


class NumericalFailureError(InvariantLabError):
    """Root finding did not meet its residual target; ``partial`` holds the roots found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedFormatError(InvariantLabError, ValueError):
    pass


class StateFormatError(ValidationError):
    """Malformed state/matrix JSON; ``source`` and ``field`` locate the problem."""

    def __init__(self, message, source=None, field=None):
        self.source, self.field = source, field
        where = ":".join(str(x) for x in (source, field) if x is not None)
        super().__init__(f"{where}: {message}" if where else message)
