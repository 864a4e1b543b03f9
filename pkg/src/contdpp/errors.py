"""Exception hierarchy shared across the package."""


class ContDppError(Exception):
    """Base class for all package errors."""


class ConfigError(ContDppError, ValueError):
    """Invalid configuration, parameters or unsupported combination."""


class DomainError(ContDppError, ValueError):
    """Input outside the documented validity region of an operation."""


class NumericError(ContDppError, RuntimeError):
    """A numerical contract was violated (non-convergence, negative density, ...)."""


class RankDeficiencyError(NumericError):
    """Vectors became linearly dependent under the working inner product."""


class BracketError(NumericError):
    """Root-finding bracket does not contain the target value."""
