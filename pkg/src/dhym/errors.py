"""Exception hierarchy shared by all dhym modules."""


class DHYMError(Exception):
    """Base class for every error raised by the package."""


class DomainError(DHYMError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class StateError(DHYMError):
    """The current iterate cannot be linearized (e.g. it is not elliptic)."""


class DegenerateArgumentError(DomainError):
    """The averaged complex quantity is too close to zero to have an argument."""


class LinearSolveError(DHYMError):
    """The Krylov solve for a Newton correction stagnated."""


class StepError(DHYMError):
    """A Newton step could not be taken (precondition or line search failure)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonConvergenceError(DHYMError):
    """Newton iteration hit its iteration cap before reaching the tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class PathError(DHYMError):
    """The continuity path could not be completed."""

    def __init__(self, message, states=None, dump=None):
        super().__init__(message)
        self.states = states or []
        self.dump = dump or {}
