"""Exception types raised across the package."""


class PhaseMotionError(Exception):
    """Base class for all package errors."""


class DimensionError(PhaseMotionError, ValueError):
    """Array shapes are inconsistent or below a minimum size."""


class SequenceError(PhaseMotionError, ValueError):
    """Frames of a sequence disagree in size, or the sequence is too short."""


class ValidationError(PhaseMotionError, ValueError):
    """A parameter or input value lies outside its allowed domain."""


class InsufficientSignalError(PhaseMotionError, ValueError):
    """Too few valid pixels to produce a reliable estimate."""


class UndefinedMetricError(PhaseMotionError, ArithmeticError):
    """A metric evaluates to 0/0 for the given inputs."""


class FormatError(PhaseMotionError, ValueError):
    """A binary file does not match the expected layout."""


class ImageIOError(PhaseMotionError, OSError):
    """An image file could not be read or written."""
