"""Exception types shared by all modules."""


class PrimeRunError(Exception):
    """Base class for errors raised by primerun."""


class ArgumentError(PrimeRunError, ValueError):
    """An argument violates an operation's precondition."""


class ResourceError(PrimeRunError):
    """A request exceeds a configured memory or work budget."""


class SamplingExhaustedError(ResourceError):
    """No closing model prime was found within the forward sampling cap."""
