"""Exception types shared across the package."""


class ParrepError(Exception):
    """Base class for all errors raised by this package."""


class CapExceeded(ParrepError):
    """An enumeration would exceed the configured cap."""

    def __init__(self, dimension: str, size: int, cap: int):
        self.dimension = dimension
        self.size = size
        self.cap = cap
        super().__init__(f"{dimension} has size {size}, above the cap {cap}")


class InvalidInput(ParrepError, ValueError):
    """Malformed or inconsistent input (bad game, bad partition, ...)."""


class ZeroMassEvent(InvalidInput):
    """Conditioning on an event of probability zero."""


class PreconditionError(ParrepError, ValueError):
    """A documented precondition of an operation does not hold."""


class NoCertificate(ParrepError):
    """No failure-of-pseudorandomness certificate could be found."""


class ConvergenceError(ParrepError):
    """An iterative procedure hit its iteration cap; the partial result is attached."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
