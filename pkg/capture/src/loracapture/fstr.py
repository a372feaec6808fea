"""Writer for the FSTR trace contract and reader for schedule JSON.

FSTR layout: magic b"FSTR", 4-byte little-endian header length, UTF-8 JSON
header {version, total_steps, height, width, channels, seed, runs: [{role}],
annotations}, then raw little-endian float32 frames, run-major then
step-major, channel-planar row-major. This module implements the byte
contract independently; the engine's reader is the conformance oracle.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from .errors import InvalidInputError

MAGIC = b"FSTR"
VERSION = 1

ROLE_CONTENT = "content"
ROLE_BASE_ON_CONTENT = "base_on_content_path"
ROLE_STYLE = "style"
ROLE_BASE_ON_STYLE = "base_on_style_path"


@dataclass
class FrameRun:
    role: str
    frames: List[np.ndarray]  # (channels, height, width) float32 per step


def write_fstr(
    path,
    total_steps: int,
    height: int,
    width: int,
    channels: int,
    seed: int,
    runs: Sequence[FrameRun],
    annotations: Dict[str, str] | None = None,
) -> None:
    shape = (channels, height, width)
    for run in runs:
        if len(run.frames) != total_steps:
            raise InvalidInputError(f"run {run.role!r} has {len(run.frames)} frames, expected {total_steps}")
        for i, frame in enumerate(run.frames):
            if frame.shape != shape:
                raise InvalidInputError(f"run {run.role!r} frame {i}: shape {frame.shape}, expected {shape}")
            if not np.all(np.isfinite(frame)):
                raise InvalidInputError(f"run {run.role!r} frame {i}: non-finite values")
    header = json.dumps(
        {
            "version": VERSION,
            "total_steps": total_steps,
            "height": height,
            "width": width,
            "channels": channels,
            "seed": seed,
            "runs": [{"role": run.role} for run in runs],
            "annotations": dict(annotations or {}),
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for run in runs:
            for frame in run.frames:
                fh.write(np.ascontiguousarray(frame, dtype="<f4").tobytes())


@dataclass
class Schedule:
    """The engine's schedule JSON, as consumed here: only the choices matter."""

    total_steps: int
    mode: str
    seed: int
    choices: List[str]

    @classmethod
    def load(cls, path) -> "Schedule":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read schedule {path}: {exc}") from exc
        if doc.get("version") != 1:
            raise InvalidInputError(f"schedule {path}: unsupported version {doc.get('version')!r}")
        choices = list(doc["choices"])
        total = int(doc["total_steps"])
        if len(choices) != total:
            raise InvalidInputError(f"schedule {path}: {len(choices)} choices for {total} steps")
        bad = sorted({c for c in choices} - {"content", "style", "merge"})
        if bad:
            raise InvalidInputError(f"schedule {path}: unknown choices {bad}")
        return cls(total_steps=total, mode=str(doc["mode"]), seed=int(doc["seed"]), choices=choices)
