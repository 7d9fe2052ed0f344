"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 2,
NumericError -> 3, ResourceCapError -> 4.
"""


class DimlabError(Exception):
    """Base class for all package errors."""


class ConfigError(DimlabError):
    """Invalid parameters, malformed config, or inconsistent inputs."""


class NumericError(DimlabError):
    """Numeric failure: no valid scales, missing sign change, underflow."""


class ResourceCapError(DimlabError):
    """A configured resource cap (atom count, product size) was exceeded."""
