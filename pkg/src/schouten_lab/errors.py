"""Exception hierarchy shared by the lab modules."""


class ArgumentError(ValueError):
    """Invalid argument: wrong shape, order out of range, bad config."""


class DomainError(ValueError):
    """Point outside the domain of an operator (cone or positivity failure).

    ``cone_margin`` and ``value`` carry the offending quantities when known.
    """

    def __init__(self, message, cone_margin=None, value=None):
        super().__init__(message)
        self.cone_margin = cone_margin
        self.value = value


class SamplingError(RuntimeError):
    """Rejection sampler exhausted its attempt budget."""


class SetupError(RuntimeError):
    """Boundary data incompatible with the barrier construction."""


class LinearizationError(RuntimeError):
    """Linearization requested at a non-admissible iterate."""

    def __init__(self, message, worst_index=None):
        super().__init__(message)
        self.worst_index = worst_index


class SolverError(RuntimeError):
    """Base class for Newton failures; carries the partial trace."""

    def __init__(self, message, trace=None, u=None):
        super().__init__(message)
        self.trace = trace
        self.u = u


class StallError(SolverError):
    """Line search fell below the minimal step."""


class NonConvergenceError(SolverError):
    """Iteration budget exhausted."""
