"""Per-step adapter importance from paired adapter/base step outputs.

For every step the adapter and the base model are evaluated on the same
latent (the latent itself evolves under the adapter). The discrepancy of
the pair, taken per frequency bin or per pixel, is differenced across
consecutive steps; the norm of that second difference is the step's
importance delta. First-order variants skip the differencing, and any
metric can be reversed so that small changes rank highest.

Step outputs are quantized to float32 before any arithmetic. That is the
precision trace files store, so a profile computed in-process and one
computed from an exported trace of the same run agree bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from . import signal, toy
from .errors import InvalidInputError

REVERSE_EPSILON = 1e-8

METRICS = ("freq2", "freq1", "spatial2", "spatial1")

Denoiser = Callable[[np.ndarray, int, int], np.ndarray]


def parse_metric(metric: str) -> Tuple[str, int, bool]:
    """Split a metric name into (domain, order, reversed)."""
    name = metric
    reverse = name.startswith("reverse-")
    if reverse:
        name = name[len("reverse-") :]
    if name not in METRICS:
        raise InvalidInputError(f"unknown metric {metric!r}; expected one of {METRICS} (optionally reverse- prefixed)")
    domain = "freq" if name.startswith("freq") else "spatial"
    order = int(name[-1])
    return domain, order, reverse


@dataclass
class ImportanceProfile:
    """Per-step deltas for one adapter under one discrepancy metric."""

    adapter_id: str
    metric: str
    deltas: List[float]
    total_steps: int
    source: str  # "toy" or "trace"
    seed: int

    def __post_init__(self):
        if len(self.deltas) != self.total_steps:
            raise InvalidInputError(
                f"ImportanceProfile: {len(self.deltas)} deltas for {self.total_steps} steps"
            )
        arr = np.asarray(self.deltas, dtype=np.float64)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidInputError("ImportanceProfile: deltas must be finite and >= 0")

    def delta(self, t: int) -> float:
        """Delta for denoising step t (1-based)."""
        if not 1 <= t <= self.total_steps:
            raise InvalidInputError(f"step {t} outside 1..{self.total_steps}")
        return self.deltas[t - 1]

    def to_json(self) -> str:
        doc = {
            "adapter_id": self.adapter_id,
            "metric": self.metric,
            "total_steps": self.total_steps,
            "seed": self.seed,
            "source": self.source,
            "deltas": [float(f"{d:.9g}") for d in self.deltas],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ImportanceProfile":
        doc = json.loads(text)
        return cls(
            adapter_id=doc["adapter_id"],
            metric=doc["metric"],
            deltas=[float(d) for d in doc["deltas"]],
            total_steps=int(doc["total_steps"]),
            source=doc["source"],
            seed=int(doc["seed"]),
        )


def step_discrepancy(adapter_out, base_out, metric: str = "freq2") -> np.ndarray:
    """Discrepancy state between paired step outputs.

    freq metrics: elementwise difference of DFT magnitude spectra (phase
    blind). spatial metrics: elementwise pixel difference. The returned
    array feeds second-order differencing; its L2 norm is the first-order
    importance.
    """
    domain, _, _ = parse_metric(metric)
    a = signal.as_image(adapter_out, "adapter_out")
    b = signal.as_image(base_out, "base_out")
    if a.shape != b.shape:
        raise InvalidInputError(f"step_discrepancy: shape mismatch {a.shape} vs {b.shape}")
    if domain == "freq":
        return signal.dft_magnitude(a) - signal.dft_magnitude(b)
    return a - b


def deltas_from_pairs(pairs: Iterable[Tuple[np.ndarray, np.ndarray]], metric: str) -> List[float]:
    """Importance deltas from (adapter_out, base_out) pairs, one per step.

    Second-order metrics use ||d_t - d_{t-1}|| with a first-order fallback
    at t = 1; first-order metrics use ||d_t|| directly.
    """
    _, order, reverse = parse_metric(metric)
    deltas: List[float] = []
    prev = None
    for adapter_out, base_out in pairs:
        d = step_discrepancy(adapter_out, base_out, metric)
        if order == 1 or prev is None:
            deltas.append(float(np.linalg.norm(d)))
        else:
            deltas.append(float(np.linalg.norm(d - prev)))
        prev = d
    if reverse:
        deltas = [1.0 / (d + REVERSE_EPSILON) for d in deltas]
    return deltas


def paired_step_outputs(
    base: Denoiser,
    adapter: Denoiser,
    total_steps: int,
    seed: int,
    height: int,
    width: int,
    channels: int = 1,
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Adapter-driven trajectory with counterfactual base outputs.

    At each step both models are applied to the same latent; the latent
    then advances under the adapter. Yields float32 (adapter_out,
    base_out) pairs, the exact frames a trace capture would record.
    """
    if total_steps < 2:
        raise InvalidInputError(f"paired_step_outputs: total_steps must be >= 2, got {total_steps}")
    h = toy.initial_noise(seed, height, width, channels)
    for t in range(1, total_steps + 1):
        adapter_out = adapter(h, t, total_steps)
        base_out = base(h, t, total_steps)
        yield adapter_out.astype(np.float32), base_out.astype(np.float32)
        h = adapter_out


def profile_adapter(
    base: Denoiser,
    adapter: Denoiser,
    total_steps: int,
    seed: int,
    metric: str = "freq2",
    *,
    height: int,
    width: int,
    channels: int = 1,
    adapter_id: str = "adapter",
) -> ImportanceProfile:
    """Profile one adapter against the base model on a fresh noise seed."""
    pairs = paired_step_outputs(base, adapter, total_steps, seed, height, width, channels)
    deltas = deltas_from_pairs(pairs, metric)
    return ImportanceProfile(
        adapter_id=adapter_id,
        metric=metric,
        deltas=deltas,
        total_steps=total_steps,
        source="toy",
        seed=seed,
    )


def reverse_profile(profile: ImportanceProfile) -> ImportanceProfile:
    """Invert importances so the smallest deltas rank first."""
    return ImportanceProfile(
        adapter_id=profile.adapter_id,
        metric=f"reverse-{profile.metric}",
        deltas=[1.0 / (d + REVERSE_EPSILON) for d in profile.deltas],
        total_steps=profile.total_steps,
        source=profile.source,
        seed=profile.seed,
    )
