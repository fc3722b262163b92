"""Exception hierarchy shared by every solver module."""


class PersuasionError(Exception):
    """Base class for library errors."""


class InputError(PersuasionError, ValueError):
    """Malformed or inconsistent input data."""


class UnreachableSignalError(PersuasionError):
    """A posterior was requested for a signal with zero marginal probability."""


class CapacityError(PersuasionError):
    """A configured size guard was exceeded."""


class RegimeError(PersuasionError):
    """A solver was invoked outside the regime it supports."""


class InvariantError(PersuasionError, AssertionError):
    """An internal invariant failed. This indicates a bug."""
