"""Domain-specific errors for hsumhr."""


class HsumhrError(Exception):
    """Base error for hsumhr."""


class SignalError(HsumhrError):
    """Raised when a signal violates its invariants (non-finite samples, bad rate, mismatched axes)."""


class WindowError(HsumhrError):
    """Raised when a signal cannot be segmented with the requested window plan."""


class NyquistError(HsumhrError):
    """Raised when a harmonic would sit at or above half the sample rate."""


class GridError(HsumhrError):
    """Raised when a frequency grid is empty or malformed."""


class ModelError(HsumhrError):
    """Raised on shape or order errors while building or fitting a harmonic model."""


class EvaluationError(HsumhrError):
    """Raised when estimates and ground truth cannot be compared."""


class PresetValidationError(HsumhrError):
    """Raised when a preset file does not conform to schema or semantics."""


class PresetLoadError(HsumhrError):
    """Raised when reading preset or reference sources fails."""


class RecordingFormatError(HsumhrError):
    """Raised when an input CSV file violates its documented schema."""


class OptionError(HsumhrError):
    """Raised when a command-line or API option value is malformed."""
