"""Capture adapter: record FSTR traces from a diffusion pipeline and apply
loraswitch schedules by per-step adapter switching."""

__version__ = "0.1.0"

from .capture import apply_schedule, capture  # noqa: F401
from .config import CaptureConfig, load_capture_config  # noqa: F401
