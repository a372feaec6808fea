"""FSTR binary traces: per-step decoded frames from a real diffusion run.

Layout: magic b"FSTR", a 4-byte little-endian header length, a UTF-8 JSON
header, then raw 32-bit little-endian float frames, run-major, step-major,
row-major with channel planes. The header carries version, step count,
frame dimensions, seed, the ordered run roles, and free-form annotations.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .errors import (
    DataError,
    FormatError,
    InvalidInputError,
    MissingRunError,
    StorageError,
    TruncatedPayloadError,
)
from .profiling import Denoiser, ImportanceProfile, deltas_from_pairs, paired_step_outputs

MAGIC = b"FSTR"
TRACE_VERSION = 1

ROLE_CONTENT = "content"
ROLE_BASE_ON_CONTENT = "base_on_content_path"
ROLE_STYLE = "style"
ROLE_BASE_ON_STYLE = "base_on_style_path"
ROLES = (ROLE_BASE_ON_CONTENT, ROLE_CONTENT, ROLE_BASE_ON_STYLE, ROLE_STYLE)

ROLE_PAIRS = {
    "content": (ROLE_CONTENT, ROLE_BASE_ON_CONTENT),
    "style": (ROLE_STYLE, ROLE_BASE_ON_STYLE),
}


@dataclass
class TraceRun:
    role: str
    frames: List[np.ndarray]  # total_steps arrays of shape (C, H, W), float32


@dataclass
class TraceFile:
    total_steps: int
    height: int
    width: int
    channels: int
    seed: int
    runs: List[TraceRun]
    annotations: Dict[str, str] = field(default_factory=dict)
    version: int = TRACE_VERSION

    def validate(self) -> None:
        if self.version != TRACE_VERSION:
            raise FormatError(f"unsupported trace version {self.version}")
        if self.total_steps < 1:
            raise InvalidInputError(f"trace needs at least one step, got {self.total_steps}")
        shape = (self.channels, self.height, self.width)
        for run in self.runs:
            if run.role not in ROLES:
                raise InvalidInputError(f"unknown run role {run.role!r}")
            if len(run.frames) != self.total_steps:
                raise InvalidInputError(
                    f"run {run.role!r} has {len(run.frames)} frames, expected {self.total_steps}"
                )
            for i, frame in enumerate(run.frames):
                if frame.shape != shape:
                    raise InvalidInputError(
                        f"run {run.role!r} frame {i} has shape {frame.shape}, expected {shape}"
                    )
        roles = {run.role for run in self.runs}
        has_content_pair = {ROLE_CONTENT, ROLE_BASE_ON_CONTENT} <= roles
        has_style_pair = {ROLE_STYLE, ROLE_BASE_ON_STYLE} <= roles
        if not (has_content_pair or has_style_pair):
            raise InvalidInputError(
                "trace must carry at least one complete role pair: "
                "(content, base_on_content_path) or (style, base_on_style_path)"
            )

    def run(self, role: str) -> TraceRun:
        for r in self.runs:
            if r.role == role:
                return r
        raise MissingRunError(f"trace has no run with role {role!r}")


def _header_doc(trace: TraceFile) -> dict:
    return {
        "version": trace.version,
        "total_steps": trace.total_steps,
        "height": trace.height,
        "width": trace.width,
        "channels": trace.channels,
        "seed": trace.seed,
        "runs": [{"role": run.role} for run in trace.runs],
        "annotations": dict(trace.annotations),
    }


def trace_bytes(trace: TraceFile) -> bytes:
    """Serialize after validating, so no bytes exist for a bad trace."""
    trace.validate()
    header = json.dumps(_header_doc(trace), sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    for run in trace.runs:
        for frame in run.frames:
            buf.write(np.ascontiguousarray(frame, dtype="<f4").tobytes())
    return buf.getvalue()


def write_trace(trace: TraceFile, destination) -> None:
    """Write to a path or binary file object."""
    payload = trace_bytes(trace)
    try:
        if hasattr(destination, "write"):
            destination.write(payload)
        else:
            with open(destination, "wb") as fh:
                fh.write(payload)
    except OSError as exc:
        raise StorageError(f"failed to write trace: {exc}") from exc


def read_trace(source) -> TraceFile:
    """Parse and validate a trace from a path or binary file object."""
    if hasattr(source, "read"):
        blob = source.read()
    else:
        with open(source, "rb") as fh:
            blob = fh.read()

    if len(blob) < 8:
        raise TruncatedPayloadError(expected=8, actual=len(blob))
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    (header_len,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + header_len:
        raise TruncatedPayloadError(expected=8 + header_len, actual=len(blob))
    try:
        doc = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable trace header: {exc}") from exc

    try:
        version = int(doc["version"])
        total_steps = int(doc["total_steps"])
        height = int(doc["height"])
        width = int(doc["width"])
        channels = int(doc["channels"])
        seed = int(doc["seed"])
        roles = [entry["role"] for entry in doc["runs"]]
        annotations = {str(k): str(v) for k, v in doc.get("annotations", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"trace header missing or malformed field: {exc}") from exc
    if version != TRACE_VERSION:
        raise FormatError(f"unsupported trace version {version}")

    frame_count = len(roles) * total_steps
    frame_elems = channels * height * width
    expected = 8 + header_len + frame_count * frame_elems * 4
    if len(blob) != expected:
        raise TruncatedPayloadError(expected=expected, actual=len(blob))

    flat = np.frombuffer(blob, dtype="<f4", offset=8 + header_len)
    if not np.all(np.isfinite(flat)):
        raise DataError("trace payload contains non-finite values")
    frames = flat.reshape(len(roles), total_steps, channels, height, width)

    runs = [
        TraceRun(role=role, frames=[np.array(frames[i, t]) for t in range(total_steps)])
        for i, role in enumerate(roles)
    ]
    trace = TraceFile(
        total_steps=total_steps,
        height=height,
        width=width,
        channels=channels,
        seed=seed,
        runs=runs,
        annotations=annotations,
        version=version,
    )
    trace.validate()
    return trace


def profile_from_trace(trace: TraceFile, role_pair: str, metric: str = "freq2") -> ImportanceProfile:
    """Importance profile from recorded frames.

    Same arithmetic as in-process profiling; the adapter frame and its
    paired base frame at each step feed the discrepancy.
    """
    if role_pair not in ROLE_PAIRS:
        raise InvalidInputError(f"role_pair must be 'content' or 'style', got {role_pair!r}")
    adapter_role, base_role = ROLE_PAIRS[role_pair]
    adapter_run = trace.run(adapter_role)
    base_run = trace.run(base_role)
    deltas = deltas_from_pairs(zip(adapter_run.frames, base_run.frames), metric)
    return ImportanceProfile(
        adapter_id=role_pair,
        metric=metric,
        deltas=deltas,
        total_steps=trace.total_steps,
        source="trace",
        seed=trace.seed,
    )


def trace_from_toy(
    base: Denoiser,
    content: Denoiser,
    style: Denoiser,
    total_steps: int,
    seed: int,
    height: int,
    width: int,
    channels: int = 1,
    annotations: Dict[str, str] | None = None,
) -> TraceFile:
    """Export the toy profiling runs as a trace.

    Records exactly the float32 frames the in-process profiler consumes,
    so reprofiling the trace reproduces the toy profiles bit for bit.
    """
    runs = []
    for adapter, adapter_role, base_role in (
        (content, ROLE_CONTENT, ROLE_BASE_ON_CONTENT),
        (style, ROLE_STYLE, ROLE_BASE_ON_STYLE),
    ):
        adapter_frames, base_frames = [], []
        for a_out, b_out in paired_step_outputs(base, adapter, total_steps, seed, height, width, channels):
            adapter_frames.append(a_out)
            base_frames.append(b_out)
        runs.append(TraceRun(role=adapter_role, frames=adapter_frames))
        runs.append(TraceRun(role=base_role, frames=base_frames))
    return TraceFile(
        total_steps=total_steps,
        height=height,
        width=width,
        channels=channels,
        seed=seed,
        runs=runs,
        annotations=annotations or {"source": "toy"},
    )
