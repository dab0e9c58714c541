"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`QdsldError`,
which lets the command-line front end map failures onto exit codes.
"""


class QdsldError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class DomainError(QdsldError, ValueError):
    """An input lies outside the domain of a formula."""


class PreconditionError(QdsldError, ValueError):
    """A closed-form result was requested outside its regime of validity."""


class NoRootError(QdsldError):
    """A root search found no sign change."""


class ConvergenceError(QdsldError):
    """An iterative solver stopped before meeting its tolerance."""


class SingularJacobianError(ConvergenceError):
    pass


class ClampingError(QdsldError):
    """Stationary inversion reached a gain threshold; the photon number diverges."""


class LinewidthInstabilityError(QdsldError):
    """Gain exceeds loss for some mode, so the stationary spectrum is undefined."""


class GridError(QdsldError, ValueError):
    """Frequency grid is not strictly increasing or does not match another grid."""


class DegenerateDataError(QdsldError, ValueError):
    pass


class FitInfeasibleError(QdsldError):
    pass


class ConfigError(QdsldError):
    exit_code = 2


class DataFormatError(QdsldError):
    """Malformed input data file."""

    exit_code = 4


class NonMonotoneGridError(DataFormatError, GridError):
    """Frequencies in an input file are not strictly increasing."""
