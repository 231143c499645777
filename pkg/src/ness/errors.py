"""Exception types raised across the package."""


class NessError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(NessError, ValueError):
    """Operands with incompatible shapes were combined."""


class SingularMatrixError(NessError, RuntimeError):
    """An exactly singular matrix was factorized.

    The attribute ``pivot`` holds the index of the first zero pivot.
    """

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = pivot


class ResourceLimitError(NessError, RuntimeError):
    """A dense reconstruction would exceed the configured memory guard."""


class DegenerateTraceError(NessError, RuntimeError):
    """The trace functional of a state vanished; observables are undefined."""


class DegenerateKernelError(NessError, RuntimeError):
    """The Liouvillian kernel is not one-dimensional."""


class ConfigError(NessError, ValueError):
    """Invalid run configuration; the message lists every problem found."""
