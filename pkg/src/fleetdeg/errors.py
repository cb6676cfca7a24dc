"""Exception hierarchy shared by all modules."""


class FleetDegError(Exception):
    """Base class for package errors."""


class ValidationError(FleetDegError, ValueError):
    """Malformed configuration, model or input data."""


class DomainError(FleetDegError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalDomainError(DomainError):
    """A formula would be evaluated where it is undefined or non-positive."""


class InfeasibleActionError(FleetDegError, ValueError):
    """An action or regulation value violates battery constraints."""


class EpisodeEnd(FleetDegError):
    """Raised when stepping past the end of a replayed trace."""
