"""Exception hierarchy shared by all modules."""


class BilliardError(Exception):
    """Base class for all toolkit errors."""


class PreconditionError(BilliardError):
    """An operation was called with arguments outside its stated contract."""


class DomainError(BilliardError):
    """A point left the region where the map / generating function is defined."""


class ConvergenceError(BilliardError):
    """An iterative solver exhausted its budget without meeting its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
