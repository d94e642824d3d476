"""Exception types raised by disim."""


class DisimError(Exception):
    """Base class for all package errors."""


class EdgeListParseError(DisimError, ValueError):
    """Malformed line in an edge-list file."""

    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class EmptyGraphError(DisimError, ValueError):
    """Edge list contained no edges."""


class SizeCapError(DisimError, ValueError):
    """A dense computation was refused because it exceeds the size cap."""


class ConvergenceError(DisimError, RuntimeError):
    """Iterative solver stopped before reaching the requested tolerance."""

    def __init__(self, message, residuals=None, n_iter=None):
        self.residuals = residuals
        self.n_iter = n_iter
        super().__init__(message)
