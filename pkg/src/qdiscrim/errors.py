"""Exception and warning types shared across the package."""


class DiscriminationError(Exception):
    """Base class for every error raised by qdiscrim."""


class NonHermitian(DiscriminationError, ValueError):
    pass


class NoConvergence(DiscriminationError, ArithmeticError):
    pass


class NotPSD(DiscriminationError, ValueError):
    pass


class DimensionMismatch(DiscriminationError, ValueError):
    pass


class CountMismatch(DiscriminationError, ValueError):
    pass


class SingularState(DiscriminationError, ValueError):
    pass


class InvalidRank(DiscriminationError, ValueError):
    pass


class BlockTooSmall(DiscriminationError, ValueError):
    pass


class WrongStateCount(DiscriminationError, ValueError):
    pass


class EmptyChannelList(DiscriminationError, ValueError):
    pass


class ParseError(DiscriminationError, ValueError):
    """Malformed document. ``location`` is a JSON-path-like pointer."""

    def __init__(self, message, location=""):
        self.location = location.rstrip(": ")
        super().__init__(f"{self.location}: {message}" if self.location else message)


class ValidationError(DiscriminationError, ValueError):
    """Well-formed input that violates an invariant.

    ``violations`` holds one human-readable line per broken invariant,
    each carrying the measured residual.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConditionsFail(DiscriminationError):
    """The orthogonality conditions needed for a construction do not hold."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"attainment conditions fail: {report.summary()}")


class NoProgress(DiscriminationError, ArithmeticError):
    pass


class NumericalHealthWarning(UserWarning):
    """Result is usable but a numerical sanity check looked suspicious."""


class DimensionWarning(UserWarning):
    """More states than Hilbert-space dimensions."""
