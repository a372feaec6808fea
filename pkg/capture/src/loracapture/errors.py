"""Errors surfaced by the capture adapter."""


class CaptureError(Exception):
    """Base class."""


class InvalidInputError(CaptureError, ValueError):
    """Bad argument or mismatched artifact (wrong step count, shapes...)."""


class ConfigurationError(CaptureError):
    """Missing or inconsistent configuration."""


class UpstreamError(CaptureError):
    """Model or pipeline could not be loaded / executed."""


class ResourceError(CaptureError):
    """Out-of-memory style failure with a suggested mitigation."""


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_UPSTREAM = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(exc, (UpstreamError, ResourceError)):
        return EXIT_UPSTREAM
    if isinstance(exc, InvalidInputError):
        return EXIT_FORMAT
    return 1
