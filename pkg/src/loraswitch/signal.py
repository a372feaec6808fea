"""Frequency-domain primitives shared by every other module.

Images are float64 arrays of shape (channels, height, width): row-major
planes, one per channel. Spectra use the same layout with the DC bin at
index (0, 0) of each plane. The DFT convention is unnormalized forward /
1/(H*W) inverse, so Parseval reads sum(|F|^2) = H*W * sum(x^2) per channel.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateTargetError, InvalidInputError


def as_image(arr, name: str = "image") -> np.ndarray:
    """Coerce to a (channels, height, width) float64 array and validate.

    Raises InvalidInputError for wrong rank, unsupported channel count,
    empty dimensions, or non-finite values.
    """
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim == 2:
        out = out[np.newaxis, :, :]
    if out.ndim != 3:
        raise InvalidInputError(f"{name}: expected (channels, height, width), got shape {out.shape}")
    c, h, w = out.shape
    if c not in (1, 3):
        raise InvalidInputError(f"{name}: channels must be 1 or 3, got {c}")
    if h < 1 or w < 1:
        raise InvalidInputError(f"{name}: degenerate dimensions {out.shape}")
    if not np.all(np.isfinite(out)):
        raise InvalidInputError(f"{name}: contains non-finite values")
    return out


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise InvalidInputError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def dft_magnitude(img) -> np.ndarray:
    """Per-channel 2D DFT magnitude spectrum (complex modulus per bin)."""
    img = as_image(img)
    return np.abs(np.fft.fft2(img, axes=(-2, -1)))


def radial_frequencies(height: int, width: int) -> np.ndarray:
    """Normalized radius per frequency bin, DC at (0, 0).

    r(u, v) = sqrt((2u'/H)^2 + (2v'/W)^2) / sqrt(2) with u', v' the signed
    frequency indices, so r(0, 0) = 0 and the corner (Nyquist, Nyquist)
    bin has r = 1.
    """
    fu = 2.0 * np.fft.fftfreq(height)
    fv = 2.0 * np.fft.fftfreq(width)
    return np.sqrt(fu[:, None] ** 2 + fv[None, :] ** 2) / np.sqrt(2.0)


def radial_mask(height: int, width: int, lo: float, hi: float) -> np.ndarray:
    """Binary mask selecting bins with lo <= r <= hi (inclusive)."""
    if not (0.0 <= lo <= hi <= 1.0):
        raise InvalidInputError(f"radial_mask: need 0 <= lo <= hi <= 1, got lo={lo}, hi={hi}")
    if height < 1 or width < 1:
        raise InvalidInputError(f"radial_mask: bad dimensions {height}x{width}")
    r = radial_frequencies(height, width)
    return ((r >= lo) & (r <= hi)).astype(np.float64)


def band_filter(img, mask: np.ndarray) -> np.ndarray:
    """Keep only the frequency bins selected by ``mask``.

    Computes the real part of IDFT(DFT(img) * mask) per channel.
    """
    img = as_image(img)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != img.shape[-2:]:
        raise InvalidInputError(f"band_filter: mask shape {mask.shape} does not match image {img.shape[-2:]}")
    spec = np.fft.fft2(img, axes=(-2, -1))
    return np.fft.ifft2(spec * mask, axes=(-2, -1)).real


def low_band(img, cutoff: float) -> np.ndarray:
    """Band-limit to normalized radii [0, cutoff]."""
    img = as_image(img)
    return band_filter(img, radial_mask(img.shape[1], img.shape[2], 0.0, cutoff))


def high_band(img, cutoff: float) -> np.ndarray:
    """Complement of low_band: radii in (cutoff, 1]."""
    img = as_image(img)
    return band_filter(img, 1.0 - radial_mask(img.shape[1], img.shape[2], 0.0, cutoff))


def spectral_l2(a, b) -> float:
    """L2 distance over all bins and channels of two spectra (or images)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b, "spectral_l2")
    return float(np.linalg.norm(a - b))


def energy(img) -> float:
    """Total spatial energy: sum of squared values over all channels."""
    arr = np.asarray(img, dtype=np.float64)
    return float(np.sum(arr * arr))


def band_energy_fraction(img, lo: float, hi: float) -> float:
    """Fraction of total spectral energy inside the [lo, hi] radial band."""
    img = as_image(img)
    mag2 = dft_magnitude(img) ** 2
    total = float(np.sum(mag2))
    if total == 0.0:
        raise DegenerateTargetError("band_energy_fraction: image has zero energy")
    mask = radial_mask(img.shape[1], img.shape[2], lo, hi)
    return float(np.sum(mag2 * mask)) / total


def content_fidelity(img, target, cutoff: float) -> float:
    """Low-band agreement with a reference image, 1 at perfect match.

    1 - ||L(img) - L(target)|| / ||L(target)|| with L the [0, cutoff]
    band filter. Can go negative for images worse than an all-zero guess.
    """
    img = as_image(img, "img")
    target = as_image(target, "target")
    _check_same_shape(img, target, "content_fidelity")
    lo_img = low_band(img, cutoff)
    lo_tgt = low_band(target, cutoff)
    denom = float(np.linalg.norm(lo_tgt))
    if denom == 0.0:
        raise DegenerateTargetError("content_fidelity: target has no energy below cutoff")
    return 1.0 - float(np.linalg.norm(lo_img - lo_tgt)) / denom


def style_fidelity(img, target, cutoff: float) -> float:
    """High-band mirror of content_fidelity, over radii (cutoff, 1]."""
    img = as_image(img, "img")
    target = as_image(target, "target")
    _check_same_shape(img, target, "style_fidelity")
    hi_img = high_band(img, cutoff)
    hi_tgt = high_band(target, cutoff)
    denom = float(np.linalg.norm(hi_tgt))
    if denom == 0.0:
        raise DegenerateTargetError("style_fidelity: target has no energy above cutoff")
    return 1.0 - float(np.linalg.norm(hi_img - hi_tgt)) / denom
