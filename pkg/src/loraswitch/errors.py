"""Exception hierarchy and process exit codes."""


class LoraSwitchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(LoraSwitchError, ValueError):
    """An argument violates a documented precondition (shape, range, NaN...)."""


class DegenerateTargetError(InvalidInputError):
    """Fidelity reference has zero energy in the band being compared."""


class ConfigurationError(LoraSwitchError):
    """Missing or inconsistent run configuration."""


class FormatError(LoraSwitchError):
    """A byte stream or document does not match its declared format."""


class TruncatedPayloadError(FormatError):
    """File ended before the declared payload was complete."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"truncated payload: expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


class DataError(FormatError):
    """Payload parsed but carries invalid values (non-finite floats)."""


class MissingRunError(FormatError):
    """Trace lacks a run role required for the requested computation."""


class UnsupportedDtypeError(FormatError):
    """Weight file stores a tensor in a dtype this tool does not decode."""


class StorageError(LoraSwitchError):
    """Filesystem write failed."""


class UpstreamError(LoraSwitchError):
    """Transport-level failure talking to an external service."""


class DescriptionError(LoraSwitchError):
    """A model response failed description validation."""


class DescriptionFormatError(DescriptionError):
    """Response is not a single '<head> with <features>' line."""


class DescriptionLengthError(DescriptionError):
    """Response exceeds the configured word budget."""


class DescriptionFeatureError(DescriptionError):
    """Response lists fewer than three features."""


class RefinementFailedError(LoraSwitchError):
    """Model responses kept failing validation after all retries."""

    def __init__(self, message: str, last_response: str):
        super().__init__(message)
        self.last_response = last_response


# CLI exit codes.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_UPSTREAM = 4
EXIT_VALIDATION = 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(exc, (RefinementFailedError, DescriptionError)):
        return EXIT_VALIDATION
    if isinstance(exc, UpstreamError):
        return EXIT_UPSTREAM
    if isinstance(exc, (FormatError, InvalidInputError)):
        return EXIT_FORMAT
    return 1
