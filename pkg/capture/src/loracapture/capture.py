"""Record profiling traces and apply engine schedules on a pipeline bridge."""

from __future__ import annotations

from pathlib import Path
from typing import List, Tuple

import numpy as np
from PIL import Image

from .bridge import Activations, PipelineBridge, downsample, make_bridge
from .config import CaptureConfig
from .errors import InvalidInputError
from .fstr import (
    ROLE_BASE_ON_CONTENT,
    ROLE_BASE_ON_STYLE,
    ROLE_CONTENT,
    ROLE_STYLE,
    FrameRun,
    Schedule,
    write_fstr,
)


def _role_activations(config: CaptureConfig, role: str) -> Activations:
    if role == "content":
        return [("content", config.content_scale)]
    if role == "style":
        return [("style", config.style_scale)]
    if role == "merge":
        return [("content", config.content_scale / 2.0), ("style", config.style_scale / 2.0)]
    raise InvalidInputError(f"unknown role {role!r}")


def _decode_small(bridge: PipelineBridge, latent: np.ndarray, config: CaptureConfig) -> np.ndarray:
    return downsample(bridge.decode(latent), config.decode_height, config.decode_width)


def capture(config: CaptureConfig, bridge: PipelineBridge | None = None) -> str:
    """Run the two profiling passes and write the trace file.

    Each pass drives the trajectory with one adapter and, at every step,
    also evaluates the bare base model on the same latent; both predictions
    are decoded, downsampled, and recorded. Both passes share the seed.
    """
    bridge = bridge or make_bridge(config)
    runs: List[FrameRun] = []
    for role, adapter_role_name, base_role_name in (
        ("content", ROLE_CONTENT, ROLE_BASE_ON_CONTENT),
        ("style", ROLE_STYLE, ROLE_BASE_ON_STYLE),
    ):
        activations = _role_activations(config, role)
        latent = bridge.initial_latent(config.seed)
        adapter_frames, base_frames = [], []
        for t in range(1, config.steps + 1):
            adapter_out = bridge.denoise_step(latent, t, config.steps, activations)
            base_out = bridge.denoise_step(latent, t, config.steps, [])
            adapter_frames.append(_decode_small(bridge, adapter_out, config))
            base_frames.append(_decode_small(bridge, base_out, config))
            latent = adapter_out
        runs.append(FrameRun(role=adapter_role_name, frames=adapter_frames))
        runs.append(FrameRun(role=base_role_name, frames=base_frames))

    write_fstr(
        config.trace_path,
        total_steps=config.steps,
        height=config.decode_height,
        width=config.decode_width,
        channels=3,
        seed=config.seed,
        runs=runs,
        annotations={
            "base_model": config.base_model,
            "content_lora": config.content_lora,
            "style_lora": config.style_lora,
            "prompt": config.prompt,
            "bridge": config.bridge,
        },
    )
    return str(config.trace_path)


def _rgb_to_image(rgb: np.ndarray) -> Image.Image:
    data = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    return Image.fromarray(np.moveaxis(data, 0, -1), mode="RGB")


def run_schedule(config: CaptureConfig, choices: List[str], bridge: PipelineBridge) -> np.ndarray:
    latent = bridge.initial_latent(config.seed)
    for t, choice in enumerate(choices, start=1):
        latent = bridge.denoise_step(latent, t, len(choices), _role_activations(config, choice))
    return bridge.decode(latent)


def apply_schedule(schedule_path, config: CaptureConfig, bridge: PipelineBridge | None = None) -> str:
    """Generate one image switching the active adapter per the schedule."""
    schedule = Schedule.load(schedule_path)
    if schedule.total_steps != config.steps:
        raise InvalidInputError(
            f"schedule has {schedule.total_steps} steps but the config expects {config.steps}"
        )
    bridge = bridge or make_bridge(config)
    rgb = run_schedule(config, schedule.choices, bridge)
    out = Path(config.output_image)
    out.parent.mkdir(parents=True, exist_ok=True)
    _rgb_to_image(rgb).save(out, format="PNG")
    prompt = _composed_prompt(config)
    out.with_suffix(".prompt.txt").write_text(prompt + "\n", encoding="utf-8")
    return str(out)


def _composed_prompt(config: CaptureConfig) -> str:
    parts = [p for p in (config.content_trigger, config.prompt, config.style_trigger) if p]
    return " ".join(parts)
