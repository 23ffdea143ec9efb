"""Exception hierarchy shared across the package."""


class SpeechLabelError(Exception):
    """Base class for all package errors."""


class ValidationError(SpeechLabelError):
    """Input violates a documented invariant (event order, bounds, schema)."""


class EventParseError(ValidationError):
    """A line of an event log could not be parsed."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class AudioError(SpeechLabelError):
    """Audio blob is malformed or a slice range is invalid."""


class SegmentationError(SpeechLabelError):
    """Click times are incompatible with the recording."""


class TransportError(SpeechLabelError):
    """Retryable ASR transport failure (network, 5xx)."""


class AsrConfigError(SpeechLabelError):
    """The ASR provider rejected the configuration; not retryable."""


class ConfigError(SpeechLabelError):
    """Service or CLI configuration is invalid."""
