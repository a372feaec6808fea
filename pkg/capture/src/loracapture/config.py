"""Capture configuration: one JSON file per content/style pair."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError


@dataclass
class CaptureConfig:
    base_model: str = ""
    content_lora: str = ""
    content_trigger: str = ""
    content_scale: float = 1.0
    style_lora: str = ""
    style_trigger: str = ""
    style_scale: float = 1.0
    prompt: str = ""
    steps: int = 30
    seed: int = 0
    guidance_scale: float = 5.0
    decode_height: int = 128  # frames are downsampled to this before storage
    decode_width: int = 128
    trace_path: str = "capture.fstr"
    output_image: str = "applied.png"
    bridge: str = "diffusers"  # or "synthetic" for the offline test pipeline
    latent_size: int = 16  # synthetic bridge only

    def validate(self) -> None:
        if self.steps < 2:
            raise ConfigurationError(f"steps: must be >= 2, got {self.steps}")
        if self.bridge not in ("diffusers", "synthetic"):
            raise ConfigurationError(f"bridge: must be 'diffusers' or 'synthetic', got {self.bridge!r}")
        if self.bridge == "diffusers" and not self.base_model:
            raise ConfigurationError("base_model: required for the diffusers bridge")
        if not self.content_lora or not self.style_lora:
            raise ConfigurationError("content_lora and style_lora: exactly one adapter id per role is required")
        if self.decode_height < 8 or self.decode_width < 8:
            raise ConfigurationError("decode resolution must be at least 8x8")


def load_capture_config(path) -> CaptureConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    known = {f.name for f in dataclasses.fields(CaptureConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    cfg = CaptureConfig(**doc)
    cfg.validate()
    return cfg
