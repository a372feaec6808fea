import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loraswitch import signal
from loraswitch.errors import DegenerateTargetError, InvalidInputError


def test_constant_image_has_only_dc():
    img = np.full((1, 8, 8), 3.25)
    mag = signal.dft_magnitude(img)
    assert mag[0, 0, 0] == pytest.approx(64 * 3.25)
    rest = mag.copy()
    rest[0, 0, 0] = 0.0
    assert np.allclose(rest, 0.0, atol=1e-9)


def test_unit_impulse_has_flat_magnitude():
    img = np.zeros((1, 8, 8))
    img[0, 0, 0] = 1.0
    mag = signal.dft_magnitude(img)
    assert np.allclose(mag, 1.0, atol=1e-12)


def test_parseval_identity(rng):
    img = rng.standard_normal((1, 16, 16))
    mag = signal.dft_magnitude(img)
    assert np.sum(mag**2) == pytest.approx(256 * np.sum(img**2), rel=1e-9)


def test_parseval_per_channel(rng):
    img = rng.standard_normal((3, 12, 10))
    mag = signal.dft_magnitude(img)
    for c in range(3):
        assert np.sum(mag[c] ** 2) == pytest.approx(120 * np.sum(img[c] ** 2), rel=1e-9)


def test_dft_rejects_non_finite():
    img = np.zeros((1, 8, 8))
    img[0, 3, 3] = np.nan
    with pytest.raises(InvalidInputError):
        signal.dft_magnitude(img)


def test_radial_mask_geometry():
    mask = signal.radial_mask(16, 16, 0.0, 1.0)
    assert mask.min() == 1.0  # corner bin has r = 1 exactly
    assert signal.radial_mask(16, 16, 0.0, 0.3)[0, 0] == 1.0  # DC included when lo = 0
    r = signal.radial_frequencies(16, 16)
    assert r[0, 0] == 0.0
    assert r[8, 8] == pytest.approx(1.0)


def test_radial_mask_bad_range():
    with pytest.raises(InvalidInputError):
        signal.radial_mask(8, 8, 0.5, 0.2)


def test_band_filter_all_pass_is_identity(rng):
    img = rng.standard_normal((1, 16, 16))
    out = signal.band_filter(img, signal.radial_mask(16, 16, 0.0, 1.0))
    assert np.max(np.abs(out - img)) < 1e-9


def test_band_filter_constant_high_band_is_zero():
    img = np.full((1, 8, 8), 2.0)
    out = signal.band_filter(img, signal.radial_mask(8, 8, 0.5, 1.0))
    assert np.max(np.abs(out)) < 1e-12


def test_band_split_preserves_energy(rng):
    img = rng.standard_normal((1, 16, 16))
    low = signal.low_band(img, 0.3)
    high = signal.high_band(img, 0.3)
    assert signal.energy(low) + signal.energy(high) == pytest.approx(signal.energy(img), rel=1e-6)


def test_band_filter_idempotent(rng):
    img = rng.standard_normal((1, 16, 16))
    mask = signal.radial_mask(16, 16, 0.2, 0.7)
    once = signal.band_filter(img, mask)
    twice = signal.band_filter(once, mask)
    assert np.max(np.abs(once - twice)) < 1e-9


def test_band_filter_dimension_mismatch(rng):
    img = rng.standard_normal((1, 16, 16))
    with pytest.raises(InvalidInputError):
        signal.band_filter(img, signal.radial_mask(8, 8, 0.0, 1.0))


def test_spectral_l2_basics():
    a = np.zeros((1, 2, 2))
    b = np.ones((1, 2, 2))
    assert signal.spectral_l2(a, a) == 0.0
    assert signal.spectral_l2(a, b) == pytest.approx(2.0)
    with pytest.raises(InvalidInputError):
        signal.spectral_l2(a, np.ones((1, 3, 2)))


def test_spectral_l2_is_a_metric(rng):
    for _ in range(100):
        a, b, c = (rng.standard_normal((1, 8, 8)) for _ in range(3))
        dab = signal.spectral_l2(a, b)
        assert dab == pytest.approx(signal.spectral_l2(b, a))
        assert dab <= signal.spectral_l2(a, c) + signal.spectral_l2(c, b) + 1e-12


def test_magnitude_is_shift_invariant(rng):
    img = rng.standard_normal((1, 16, 16))
    shifted = np.roll(img, shift=(3, 5), axis=(-2, -1))
    m1 = signal.dft_magnitude(img)
    m2 = signal.dft_magnitude(shifted)
    assert np.linalg.norm(m1 - m2) <= 1e-6 * np.linalg.norm(m1)


def test_content_fidelity_trivials(rng):
    target = signal.low_band(rng.standard_normal((1, 16, 16)), 0.3)
    assert signal.content_fidelity(target, target, 0.3) == pytest.approx(1.0)
    assert signal.content_fidelity(np.zeros_like(target), target, 0.3) == pytest.approx(0.0)


def test_content_fidelity_disjoint_bands(rng):
    raw = rng.standard_normal((1, 16, 16))
    target = signal.low_band(raw, 0.3)
    img = signal.high_band(rng.standard_normal((1, 16, 16)), 0.3)
    assert signal.content_fidelity(img, target, 0.3) == pytest.approx(0.0, abs=1e-6)


def test_style_fidelity_trivials(rng):
    target = signal.high_band(rng.standard_normal((1, 16, 16)), 0.3)
    assert signal.style_fidelity(target, target, 0.3) == pytest.approx(1.0)
    assert signal.style_fidelity(np.zeros_like(target), target, 0.3) == pytest.approx(0.0)
    img = signal.low_band(rng.standard_normal((1, 16, 16)), 0.3)
    assert signal.style_fidelity(img, target, 0.3) == pytest.approx(0.0, abs=1e-6)


def test_fidelity_degenerate_targets():
    zeros = np.zeros((1, 8, 8))
    with pytest.raises(DegenerateTargetError):
        signal.content_fidelity(zeros, zeros, 0.3)
    with pytest.raises(DegenerateTargetError):
        signal.style_fidelity(zeros, zeros, 0.3)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_parseval_property(seed):
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    img = gen.standard_normal((1, 12, 12))
    mag = signal.dft_magnitude(img)
    assert np.sum(mag**2) == pytest.approx(144 * np.sum(img**2), rel=1e-6)
