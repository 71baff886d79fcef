"""Exception and warning types shared across the package."""


class SubnyqError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SubnyqError):
    """A configuration file or parameter set is malformed."""


class NonPositiveInput(ConfigError):
    """A quantity that must be strictly positive (or non-negative) is not."""


class NonIntegerSampleCount(ConfigError):
    """The observation window does not hold an even integer number of samples."""


class IndexOutOfRange(SubnyqError):
    """A bin or harmonic index lies outside its admissible range."""


class LengthMismatch(SubnyqError):
    """An input vector does not match the length implied by the configuration."""


class DopplerOutOfRange(SubnyqError):
    """A Doppler shift exceeds the half-spacing of the harmonic grid."""


class SingularCovariance(SubnyqError):
    """The noise covariance is singular on at least one frequency bin."""


class SingularInformation(SubnyqError):
    """A Fisher information matrix is singular and cannot be inverted."""


class ZeroSignal(SubnyqError):
    """The hypothesised signal has (numerically) zero energy."""


class FactorizationFailure(SubnyqError):
    """A covariance factorization failed (matrix not positive semidefinite)."""


class BandwidthOutOfRange(ConfigError):
    """A requested bandwidth is incompatible with the configured system."""


class CodeLengthMismatch(SubnyqError):
    """A modulation code does not have the expected number of chips."""


class DegenerateObjective(UserWarning):
    """The leading eigenvalue of an optimization step is (nearly) repeated,
    so the maximiser is not unique."""


class NotConverged(UserWarning):
    """An iterative routine stopped at its iteration cap before reaching the
    requested tolerance."""
