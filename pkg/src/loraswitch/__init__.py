"""Frequency-profiled dynamic adapter switching for multi-step denoising."""

__version__ = "0.1.0"

from . import alignment, errors, profiling, scheduling, signal, toy, trace, weights  # noqa: F401
