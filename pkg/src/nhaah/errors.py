"""Exception types raised by the library."""


class InvalidParameterError(ValueError):
    """A parameter or input lies outside the domain an operation accepts."""


class DomainError(InvalidParameterError):
    """An analytic formula is undefined for the requested parameters."""


class SolverError(RuntimeError):
    """Dense eigensolver failed or returned an inaccurate decomposition."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularBaseError(RuntimeError):
    """The base energy of a winding number sits on the spectrum."""


class DegenerateRateError(RuntimeError):
    """Two competing modes grow at the same rate, so no crossing time exists."""


class DegenerateInitialStateError(RuntimeError):
    """The initial state has no weight on any eigenmode."""


class NumericalConsistencyError(RuntimeError):
    """A quantity that must be non-negative came out clearly negative."""
