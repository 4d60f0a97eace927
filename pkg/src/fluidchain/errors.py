"""Exception hierarchy shared across the package.

Every error raised by library code derives from FluidchainError so callers
(and the command-line front end) can map failures to a small set of outcomes:
bad configuration, numeric trouble, or an exhausted budget.
"""


class FluidchainError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FluidchainError, ValueError):
    """A parameter is outside its documented domain."""


class ConfigError(FluidchainError):
    """A run configuration is malformed (unknown key, missing seed, ...)."""


class SingularityError(FluidchainError):
    """Evaluation requested exactly on a density singularity."""


class SingularConeError(FluidchainError):
    """A tail-field evaluation was requested outside the open cone where
    the limiting field is defined (e.g. on a mixture diagonal)."""


class NumericError(FluidchainError):
    """A computation produced non-finite values or failed to converge."""


class StiffnessError(NumericError):
    """Step-size control collapsed below the minimum allowed step."""


class BudgetError(FluidchainError):
    """An iteration budget was exhausted before the run completed.

    The partially computed object, when one exists, is attached as
    ``partial`` so callers can inspect what was produced.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CoverageError(FluidchainError):
    """A trajectory is too short to cover the requested time horizon."""
