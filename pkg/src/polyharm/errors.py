"""Exception hierarchy shared by all modules."""


class PolyharmError(Exception):
    """Base class for every error raised by the package."""


class ArgumentError(PolyharmError, ValueError):
    """Bad argument: wrong dimension, order, index or shape."""


class ValidationError(PolyharmError, ValueError):
    """Input data violates a mathematical precondition (commutation, block form, ...)."""


class CatalogLookupError(PolyharmError, KeyError):
    """Unknown catalog group or builtin function."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DomainError(PolyharmError, ArithmeticError):
    """An analytic primitive was evaluated on (or too close to) its branch cut."""


class NumericalError(PolyharmError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class SamplingError(PolyharmError, RuntimeError):
    """The sampler could not produce enough points satisfying the guards."""


class CapabilityError(PolyharmError, NotImplementedError):
    """Requested closed form is not available and no fallback was enabled."""
