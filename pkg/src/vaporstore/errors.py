"""Exception types raised across the package."""


class VaporStoreError(Exception):
    """Base class for all errors raised by vaporstore."""


class DomainError(VaporStoreError, ValueError):
    """An argument lies outside the domain of the operation."""


class ShapeError(VaporStoreError, ValueError):
    """Array dimensions disagree with the grid or with each other."""


class ConfigurationError(VaporStoreError, ValueError):
    """A configuration value or geometry is invalid.

    ``key`` names the offending configuration entry when there is one.
    """

    def __init__(self, message, key=None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class FormatError(VaporStoreError, ValueError):
    """A file could not be parsed in the expected format."""


class DegenerateInputError(VaporStoreError, ValueError):
    """The input carries no usable signal (for example an all-dark profile)."""
