"""Turn two importance profiles into a per-step adapter choice.

The mixing ratio x_t weighs style importance against content importance
with a linear step ramp, the switch coefficient maps it through a cosine
to a content preference eta_t in [0, 1], and a seeded uniform draw per
step picks the adapter. Baseline modes (fixed, random, single-adapter,
merge) share the same machinery so schedules stay replayable artifacts:
the draws are generated once from the seed and stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .profiling import ImportanceProfile

CONTENT = "content"
STYLE = "style"
MERGE = "merge"

MODES = ("dynamic", "fixed", "random", "content_only", "style_only", "merge")

SCHEDULE_VERSION = 1


def mixing_ratio(delta_c: float, delta_s: float, t: int, total_steps: int) -> float:
    """Step-weighted share of style importance, in [0, 1].

    x_t = (delta_s * ratio) / (delta_s * ratio + delta_c * (1 - ratio))
    with ratio = t / total_steps. Equal deltas cancel algebraically, so
    that case returns the ratio directly (this also covers the documented
    zero-denominator fallback and keeps the fixed-mode reduction bitwise).
    """
    if delta_c < 0 or delta_s < 0:
        raise InvalidInputError(f"mixing_ratio: deltas must be >= 0, got ({delta_c}, {delta_s})")
    if not 1 <= t <= total_steps:
        raise InvalidInputError(f"mixing_ratio: step {t} outside 1..{total_steps}")
    ratio = t / total_steps
    if delta_c == delta_s:
        return ratio
    denom = delta_s * ratio + delta_c * (1.0 - ratio)
    if denom == 0.0:
        return ratio
    return (delta_s * ratio) / denom


def switch_coefficient(x: float) -> float:
    """Cosine content preference: eta = 0.5 * (1 + cos(pi * x))."""
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"switch_coefficient: x must be in [0, 1], got {x}")
    return 0.5 * (1.0 + math.cos(math.pi * x))


def select_adapter(eta: float, draw: float) -> str:
    """Content when eta > draw, style when eta < draw, content on a tie."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidInputError(f"select_adapter: eta must be in [0, 1], got {eta}")
    if not 0.0 <= draw <= 1.0:
        raise InvalidInputError(f"select_adapter: draw must be in [0, 1], got {draw}")
    return CONTENT if eta >= draw else STYLE


def schedule_draws(seed: int, total_steps: int) -> List[float]:
    """The per-step uniform draws a given seed produces."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    return [float(d) for d in rng.uniform(0.0, 1.0, size=total_steps)]


def choices_from(etas: Sequence[float], draws: Sequence[float]) -> List[str]:
    """Apply the selection rule stepwise."""
    if len(etas) != len(draws):
        raise InvalidInputError(f"choices_from: {len(etas)} etas vs {len(draws)} draws")
    return [select_adapter(e, d) for e, d in zip(etas, draws)]


@dataclass
class SwitchSchedule:
    """Replayable per-step adapter plan plus the randomness that made it."""

    total_steps: int
    mode: str
    choices: List[str]
    etas: List[float]
    draws: List[float]
    seed: int

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"SwitchSchedule: unknown mode {self.mode!r}")
        for name, values in (("choices", self.choices), ("etas", self.etas), ("draws", self.draws)):
            if len(values) != self.total_steps:
                raise InvalidInputError(f"SwitchSchedule: {name} has {len(values)} entries for {self.total_steps} steps")
        if any(not 0.0 <= e <= 1.0 for e in self.etas):
            raise InvalidInputError("SwitchSchedule: etas must lie in [0, 1]")
        if self.mode in ("dynamic", "fixed", "random"):
            expected = choices_from(self.etas, self.draws)
            if expected != self.choices:
                raise InvalidInputError("SwitchSchedule: choices inconsistent with etas and draws")

    def choice(self, t: int) -> str:
        if not 1 <= t <= self.total_steps:
            raise InvalidInputError(f"step {t} outside 1..{self.total_steps}")
        return self.choices[t - 1]

    def to_json(self) -> str:
        doc = {
            "version": SCHEDULE_VERSION,
            "total_steps": self.total_steps,
            "mode": self.mode,
            "seed": self.seed,
            "etas": self.etas,
            "draws": self.draws,
            "choices": self.choices,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SwitchSchedule":
        doc = json.loads(text)
        if doc.get("version") != SCHEDULE_VERSION:
            raise InvalidInputError(f"SwitchSchedule: unsupported version {doc.get('version')!r}")
        return cls(
            total_steps=int(doc["total_steps"]),
            mode=doc["mode"],
            choices=list(doc["choices"]),
            etas=[float(e) for e in doc["etas"]],
            draws=[float(d) for d in doc["draws"]],
            seed=int(doc["seed"]),
        )


def schedule_from_coefficients(etas: Sequence[float], mode: str, seed: int) -> SwitchSchedule:
    """Assemble a schedule from explicit etas: draw once, select stepwise."""
    etas = [float(e) for e in etas]
    draws = schedule_draws(seed, len(etas))
    return SwitchSchedule(
        total_steps=len(etas),
        mode=mode,
        choices=choices_from(etas, draws),
        etas=etas,
        draws=draws,
        seed=seed,
    )


def build_schedule(
    mode: str,
    seed: int,
    profile_content: Optional[ImportanceProfile] = None,
    profile_style: Optional[ImportanceProfile] = None,
    total_steps: Optional[int] = None,
) -> SwitchSchedule:
    """Build the per-step plan for any mode.

    dynamic needs both profiles; the other modes only need a step count
    (taken from the profiles when they are supplied anyway).
    """
    if mode not in MODES:
        raise InvalidInputError(f"build_schedule: unknown mode {mode!r}")
    for p in (profile_content, profile_style):
        if p is not None:
            if total_steps is not None and p.total_steps != total_steps:
                raise InvalidInputError(
                    f"build_schedule: profile has {p.total_steps} steps, expected {total_steps}"
                )
            total_steps = p.total_steps
    if mode == "dynamic":
        if profile_content is None or profile_style is None:
            raise ConfigurationError("build_schedule: dynamic mode requires both importance profiles")
        if profile_content.total_steps != profile_style.total_steps:
            raise InvalidInputError(
                f"build_schedule: profiles disagree on steps "
                f"({profile_content.total_steps} vs {profile_style.total_steps})"
            )
        if profile_content.source != profile_style.source:
            raise InvalidInputError(
                f"build_schedule: profiles from different sources "
                f"({profile_content.source!r} vs {profile_style.source!r})"
            )
    if total_steps is None:
        raise ConfigurationError("build_schedule: total_steps required when no profiles are given")
    if total_steps < 1:
        raise InvalidInputError(f"build_schedule: total_steps must be >= 1, got {total_steps}")

    T = total_steps
    if mode == "dynamic":
        etas = [
            switch_coefficient(mixing_ratio(profile_content.delta(t), profile_style.delta(t), t, T))
            for t in range(1, T + 1)
        ]
        return schedule_from_coefficients(etas, mode, seed)
    if mode == "fixed":
        etas = [switch_coefficient(mixing_ratio(1.0, 1.0, t, T)) for t in range(1, T + 1)]
        return schedule_from_coefficients(etas, mode, seed)
    if mode == "random":
        return schedule_from_coefficients([0.5] * T, mode, seed)

    # Degenerate modes: choices are forced, draws kept for replayability.
    draws = schedule_draws(seed, T)
    forced = {"content_only": (CONTENT, 1.0), "style_only": (STYLE, 0.0), "merge": (MERGE, 0.5)}
    choice, eta = forced[mode]
    return SwitchSchedule(
        total_steps=T,
        mode=mode,
        choices=[choice] * T,
        etas=[eta] * T,
        draws=draws,
        seed=seed,
    )


def ablate_steps(profile: ImportanceProfile, k: int, policy: str, seed: int = 0) -> List[int]:
    """Pick k step indices (1-based) to remove: by largest delta, smallest
    delta, or uniformly at random. Ties break toward the lower index."""
    T = profile.total_steps
    if not 0 <= k <= T:
        raise InvalidInputError(f"ablate_steps: k must be in 0..{T}, got {k}")
    steps = list(range(1, T + 1))
    if policy == "top":
        ranked = sorted(steps, key=lambda t: (-profile.delta(t), t))
    elif policy == "bottom":
        ranked = sorted(steps, key=lambda t: (profile.delta(t), t))
    elif policy == "random":
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        ranked = [int(t) for t in rng.permutation(np.arange(1, T + 1))]
    else:
        raise InvalidInputError(f"ablate_steps: unknown policy {policy!r}")
    return sorted(ranked[:k])
