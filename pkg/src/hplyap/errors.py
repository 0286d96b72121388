"""Exception types shared across the package."""


class HplyapError(Exception):
    """Base class for all package errors."""


class SingularDynamics(HplyapError, ValueError):
    """The state matrix is singular, so the step response has no finite equilibrium."""


class DimensionCapExceeded(HplyapError, ValueError):
    """A hierarchy level would exceed the configured lifted-dimension cap."""


class Infeasible(HplyapError):
    """The semidefinite program has no solution.

    ``diagnostics`` carries whatever the backend reported, such as its status
    string and residuals.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NumericalFailure(HplyapError):
    """The backend stalled or returned a point that fails independent validation."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NoFeasibleAlpha(HplyapError):
    """Bisection could not start: the lower end of the search interval is infeasible."""


class SystemFileError(HplyapError, ValueError):
    """A system description file is malformed or inconsistent."""
