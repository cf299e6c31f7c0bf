"""Exception hierarchy shared by every module."""


class QFBiasError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(QFBiasError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedDiscriminantError(DomainError):
    """The class group of the discriminant has the wrong shape for the operation."""


class PreconditionError(QFBiasError, ValueError):
    """A table or bitmap is too small for the requested computation."""


class ResourceError(QFBiasError, MemoryError):
    """The request would exceed the configured memory budget."""


class NumericError(QFBiasError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""
