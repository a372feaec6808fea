"""Analytic, seedable denoising testbed.

The denoiser pulls its state toward a fixed target image, but only inside
a low-frequency band whose cutoff grows linearly with the step index.
Early steps therefore commit coarse structure and later steps fine detail,
which is the behavior the profiler and scheduler are designed around.

All randomness comes from counter-based Philox generators so trajectories
are reproducible across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from . import signal
from .errors import InvalidInputError

# Pinned default configuration used by the reference experiments and tests.
DEFAULT_TOTAL_STEPS = 50
DEFAULT_HEIGHT = 64
DEFAULT_WIDTH = 64
DEFAULT_CHANNELS = 1
DEFAULT_GAIN = 0.35
CONTENT_BAND = (0.0, 0.3)
STYLE_BAND = (0.35, 0.9)


@dataclass(frozen=True)
class DenoiserSpec:
    """Analytic denoiser: per-step pull of strength ``gain`` toward ``target``."""

    target: np.ndarray
    gain: float = DEFAULT_GAIN
    band_lo: float = 0.0
    band_hi: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "target", signal.as_image(self.target, "target"))
        if not (0.0 < self.gain <= 1.0):
            raise InvalidInputError(f"DenoiserSpec: gain must be in (0, 1], got {self.gain}")
        if not self.band_lo < self.band_hi:
            raise InvalidInputError(f"DenoiserSpec: band_lo {self.band_lo} must be < band_hi {self.band_hi}")


@dataclass
class Trajectory:
    """States h_0 ... h_T of one denoising run."""

    steps: List[np.ndarray]
    seed: int
    total_steps: int

    def __post_init__(self):
        if len(self.steps) != self.total_steps + 1:
            raise InvalidInputError(
                f"Trajectory: expected {self.total_steps + 1} states, got {len(self.steps)}"
            )

    @property
    def final(self) -> np.ndarray:
        return self.steps[-1]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _normalize_mean_square(img: np.ndarray) -> np.ndarray:
    """Scale so the mean squared pixel value is 1 (unit average energy)."""
    ms = float(np.mean(img * img))
    if ms == 0.0:
        raise InvalidInputError("cannot normalize an all-zero image")
    return img / np.sqrt(ms)


def make_content_target(seed: int, height: int, width: int) -> np.ndarray:
    """Deterministic low-frequency target: soft discs and rectangles.

    The result is band-limited to radii [0, 0.3], so at least 99% of its
    spectral energy sits in the content band by construction.
    """
    if height < 8 or width < 8:
        raise InvalidInputError(f"make_content_target: dimensions must be >= 8, got {height}x{width}")
    rng = _rng(seed)
    ys = (np.arange(height) + 0.5) / height
    xs = (np.arange(width) + 0.5) / width
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    img = np.zeros((height, width))
    n_shapes = int(rng.integers(2, 5))
    for _ in range(n_shapes):
        cy, cx = rng.uniform(0.2, 0.8, size=2)
        amp = rng.uniform(0.6, 1.5) * (1.0 if rng.uniform() < 0.7 else -1.0)
        if rng.uniform() < 0.5:
            radius = rng.uniform(0.10, 0.28)
            d2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / radius**2
            img += amp * np.exp(-(d2**2))
        else:
            hy, hx = rng.uniform(0.08, 0.24, size=2)
            img += amp * np.exp(-(((yy - cy) / hy) ** 4 + ((xx - cx) / hx) ** 4))
    limited = signal.low_band(img[np.newaxis, :, :], CONTENT_BAND[1])
    return _normalize_mean_square(limited)


def make_style_target(seed: int, height: int, width: int) -> np.ndarray:
    """Deterministic high-frequency texture in the [0.35, 0.9] annulus.

    Whitens a seeded noise spectrum (unit magnitude, random phase) and
    keeps only the annulus bins, giving a flat annular magnitude profile.
    """
    if height < 8 or width < 8:
        raise InvalidInputError(f"make_style_target: dimensions must be >= 8, got {height}x{width}")
    rng = _rng(seed)
    noise = rng.standard_normal((height, width))
    spec = np.fft.fft2(noise)
    mag = np.abs(spec)
    unit = np.where(mag > 0, spec / np.where(mag > 0, mag, 1.0), 1.0)
    mask = signal.radial_mask(height, width, STYLE_BAND[0], STYLE_BAND[1])
    texture = np.fft.ifft2(unit * mask).real[np.newaxis, :, :]
    # Hermitian symmetry makes the inverse real up to rounding; re-project
    # so the band constraint is exact.
    limited = signal.band_filter(texture, mask)
    return _normalize_mean_square(limited)


def denoise_step(spec: DenoiserSpec, h: np.ndarray, t: int, total_steps: int) -> np.ndarray:
    """One step: pull h toward the target inside radii [0, t/total_steps]."""
    if not 1 <= t <= total_steps:
        raise InvalidInputError(f"denoise_step: step {t} outside 1..{total_steps}")
    h = signal.as_image(h, "h")
    if h.shape != spec.target.shape:
        raise InvalidInputError(f"denoise_step: state shape {h.shape} does not match target {spec.target.shape}")
    cutoff = t / total_steps
    mask = signal.radial_mask(h.shape[1], h.shape[2], 0.0, cutoff)
    return h + spec.gain * signal.band_filter(spec.target - h, mask)


def as_denoiser(spec: DenoiserSpec) -> Callable[[np.ndarray, int, int], np.ndarray]:
    """Adapt a DenoiserSpec to the (h, t, total_steps) callable contract."""

    def step(h: np.ndarray, t: int, total_steps: int) -> np.ndarray:
        return denoise_step(spec, h, t, total_steps)

    return step


def initial_noise(seed: int, height: int, width: int, channels: int = 1) -> np.ndarray:
    """Standard-normal starting state, Philox-seeded."""
    return _rng(seed).standard_normal((channels, height, width))


def run_trajectory(
    policy: Callable[[int], DenoiserSpec],
    seed: int,
    total_steps: int,
    height: int,
    width: int,
    channels: int = 1,
) -> Trajectory:
    """Run h_0 -> h_T with the per-step spec chosen by ``policy(t)``."""
    if total_steps < 2:
        raise InvalidInputError(f"run_trajectory: total_steps must be >= 2, got {total_steps}")
    h = initial_noise(seed, height, width, channels)
    steps = [h]
    for t in range(1, total_steps + 1):
        h = denoise_step(policy(t), h, t, total_steps)
        steps.append(h)
    return Trajectory(steps=steps, seed=seed, total_steps=total_steps)


def merge_spec(a: DenoiserSpec, b: DenoiserSpec) -> DenoiserSpec:
    """Spec whose steps equal the average of the two specs' step outputs.

    Valid because denoise_step is affine in the target for a shared gain.
    """
    if a.gain != b.gain:
        raise InvalidInputError("merge_spec: gains must match for output averaging to reduce to target averaging")
    return DenoiserSpec(
        target=(a.target + b.target) / 2.0,
        gain=a.gain,
        band_lo=min(a.band_lo, b.band_lo),
        band_hi=max(a.band_hi, b.band_hi),
    )


@dataclass(frozen=True)
class ToySetup:
    """The three denoisers of one content/style pair plus dimensions."""

    base: DenoiserSpec
    content: DenoiserSpec
    style: DenoiserSpec
    total_steps: int
    height: int
    width: int
    channels: int = 1
    content_seed: int = 101
    style_seed: int = 202


def default_setup(
    total_steps: int = DEFAULT_TOTAL_STEPS,
    height: int = DEFAULT_HEIGHT,
    width: int = DEFAULT_WIDTH,
    channels: int = DEFAULT_CHANNELS,
    gain: float = DEFAULT_GAIN,
    content_seed: int = 101,
    style_seed: int = 202,
) -> ToySetup:
    """Pinned default pair: low-band content discs, annular style texture,
    all-zero base target."""
    content_target = make_content_target(content_seed, height, width)
    style_target = make_style_target(style_seed, height, width)
    if channels == 3:
        content_target = np.repeat(content_target, 3, axis=0)
        style_target = np.repeat(style_target, 3, axis=0)
    zero = np.zeros_like(content_target)
    return ToySetup(
        base=DenoiserSpec(target=zero, gain=gain, band_lo=0.0, band_hi=1.0),
        content=DenoiserSpec(target=content_target, gain=gain, band_lo=CONTENT_BAND[0], band_hi=CONTENT_BAND[1]),
        style=DenoiserSpec(target=style_target, gain=gain, band_lo=STYLE_BAND[0], band_hi=STYLE_BAND[1]),
        total_steps=total_steps,
        height=height,
        width=width,
        channels=channels,
        content_seed=content_seed,
        style_seed=style_seed,
    )
