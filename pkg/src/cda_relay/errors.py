"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and domain
problems exit 2, resource guards exit 3.
"""


class ValidationError(ValueError):
    """Bad configuration, argument, or domain input."""


class ResourceLimitError(RuntimeError):
    """A desk-scale guard tripped (codebook too large, too many pairs, ...)."""


class InsufficientDataError(RuntimeError):
    """Not enough observed events to estimate the requested quantity."""
