"""Exception types shared across the package."""


class RfqramError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RfqramError):
    """Unknown task type, bad parameter name or inconsistent model setup."""


class DomainError(RfqramError, ValueError):
    """Argument outside the mathematical domain of a function."""


class CombinationError(RfqramError):
    """Members cannot be executed together under the requested concurrency mode."""


class SizeError(RfqramError):
    """An exhaustive routine was asked to enumerate more than its guard allows."""
