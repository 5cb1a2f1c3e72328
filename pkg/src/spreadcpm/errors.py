"""Exception types shared across the package."""


class SpreadCpmError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpreadCpmError, ValueError):
    """Invalid parameters or mutually inconsistent inputs."""


class SignalRangeError(SpreadCpmError, IndexError):
    """A requested time window or index falls outside the available data."""


class DomainError(SpreadCpmError, ValueError):
    """A numeric argument lies outside the domain of a formula."""
