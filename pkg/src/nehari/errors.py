"""Exception hierarchy shared by all modules."""


class NehariError(Exception):
    """Base class for library errors."""


class ConfigurationError(NehariError, ValueError):
    """Invalid grid sizes, model parameters or run configuration."""


class DomainError(NehariError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateInputError(NehariError, ValueError):
    """Field for which the requested quantity is undefined (typically u = 0)."""


class NotApplicableError(NehariError):
    """Quantity not defined for the selected model."""


class HypothesisViolation(NehariError):
    """Structural assumption failed numerically (e.g. empty Nehari set)."""


class NoRootError(HypothesisViolation):
    """Fibering equation has no sign change inside the bracket cap."""
