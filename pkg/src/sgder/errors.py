"""Exception hierarchy shared across the package."""


class SgderError(Exception):
    """Base class for all errors raised by sgder."""


class DomainError(SgderError, ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(SgderError, ValueError):
    """A configuration is malformed or infeasible."""


class ScheduleLogicError(SgderError, RuntimeError):
    """An event was applied to a schedule that cannot accept it."""


class NumericError(SgderError, FloatingPointError):
    """A NaN, an Inf or an overflow was encountered."""


class DataError(SgderError, ValueError):
    """Observed data (e.g. a loss value) is not usable."""
