"""Exception and warning types raised across the package."""


class CmjvaxError(Exception):
    """Base class for all package errors."""


class InvalidLawError(CmjvaxError, ValueError):
    """A reproduction law violates its parameter constraints."""


class CensoredTreeError(CmjvaxError, RuntimeError):
    """An all-time functional was requested on a birth-capped tree."""


class MultipleInitialsError(CmjvaxError, ValueError):
    """Functional defined only for single-initial trees (a = 1)."""


class EmptyInputError(CmjvaxError, ValueError):
    """An estimator received no data."""


class OutOfDomainError(CmjvaxError, ValueError):
    """A closed-form evaluation was requested outside its domain."""


class ExplosionRateError(CmjvaxError, RuntimeError):
    """Too many replicates hit the birth cap for an all-time functional."""


class ConfigError(CmjvaxError, ValueError):
    """Experiment configuration failed schema validation."""


class ExplosionWarning(UserWarning):
    """A simulated tree hit the birth cap and was censored."""
