"""Exception hierarchy shared by every identkit module."""


class IdentError(Exception):
    """Base class for all identkit errors."""


class EnumerationOverflow(IdentError):
    """The universe holds more states than the configured enumeration cap."""

    def __init__(self, size, cap):
        super().__init__(f"universe has {size} states, cap is {cap}")
        self.size = size
        self.cap = cap


class NotEnumerable(IdentError):
    """Raised when enumeration is requested on a polytope universe."""


class UnreachableObservation(IdentError):
    """The observation is not in the image of the observation mapping.

    Kept separate from "not identifiable": identifiability at a point is
    only defined for points of the observation space.
    """


class EmptyUniverse(IdentError):
    """No state satisfies the imposed assumptions."""

    def __init__(self, message, assumption=None):
        super().__init__(message)
        self.assumption = assumption


class InconsistentObservation(IdentError):
    """Observed data cannot come from the declared population."""


class Infeasible(IdentError):
    """The LP constraints admit no probability vector."""


class NotLinearizable(IdentError):
    """A functional or assumption has no linear form at the requested point."""


class UncertifiedInput(IdentError):
    """A composition received a value without an identifiability certificate."""


class NonMonotoneCombiner(IdentError):
    """Interval materialization needs a combiner monotone in its free argument."""


class InvalidPoint(IdentError, ValueError):
    """Closed-form inputs violate their domain."""


class OutOfRange(IdentError, ValueError):
    """A probability argument lies outside [0, 1]."""


class OutOfSupport(IdentError, ValueError):
    """Evaluation point lies outside the support of a discrete CDF."""


class SpecError(IdentError):
    """Problem document is well-formed text but not a valid problem."""

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class DSLSyntaxError(SpecError):
    pass


class UnknownIdentifier(SpecError):
    pass


class DuplicateDeclaration(SpecError):
    pass
