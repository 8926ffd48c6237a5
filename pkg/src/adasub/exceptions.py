"""Exception and warning classes raised across the package."""


class AdasubError(Exception):
    """Base class for all package errors."""


class InconsistentObservation(AdasubError, ValueError):
    """A partial realization has zero probability under the prior."""


class ElementReuse(AdasubError, ValueError):
    """A policy selects an element that was already observed."""


class MissingBranch(AdasubError, KeyError):
    """A policy node has no child for a realized state."""


class BudgetExceeded(AdasubError, RuntimeError):
    """An exhaustive enumeration would exceed its configured cap."""

    def __init__(self, cap, what="enumeration"):
        self.cap = cap
        self.what = what
        super().__init__(f"{what} exceeded the cap of {cap} (raise it with --cap or ADASUB_CAP)")


class InvalidParams(AdasubError, ValueError):
    """Instance parameters are outside their admissible range."""


class InvalidInput(AdasubError, ValueError):
    """A numeric input violates a documented precondition."""


class DimensionMismatch(AdasubError, ValueError):
    pass


class NotSymmetric(AdasubError, ValueError):
    pass


class NoConvergence(AdasubError, RuntimeError):
    pass


class ParseError(AdasubError, ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class DuplicateEdge(ParseError):
    pass


class UnknownCase(AdasubError, KeyError):
    pass


class NotNormalized(UserWarning):
    """Feature columns deviate from unit norm where unit norm is assumed."""
