import struct
from pathlib import Path

import numpy as np
import pytest

from loraswitch import profiling, toy, trace
from loraswitch.errors import (
    DataError,
    FormatError,
    InvalidInputError,
    MissingRunError,
    TruncatedPayloadError,
)
from loraswitch.trace import TraceFile, TraceRun, read_trace, trace_bytes, write_trace

GOLDEN = Path(__file__).parent / "data" / "golden.fstr"


def _small_trace(rng, total_steps=3, height=8, width=8, roles=("content", "base_on_content_path")):
    runs = [
        TraceRun(role=role, frames=[rng.standard_normal((1, height, width)).astype(np.float32) for _ in range(total_steps)])
        for role in roles
    ]
    return TraceFile(
        total_steps=total_steps,
        height=height,
        width=width,
        channels=1,
        seed=9,
        runs=runs,
        annotations={"model": "none", "prompt": "synthetic"},
    )


def test_round_trip_structural_equality(rng, tmp_path):
    original = _small_trace(rng)
    path = tmp_path / "t.fstr"
    write_trace(original, path)
    loaded = read_trace(path)
    assert loaded.total_steps == original.total_steps
    assert (loaded.height, loaded.width, loaded.channels) == (8, 8, 1)
    assert loaded.seed == original.seed
    assert loaded.annotations == original.annotations
    assert [r.role for r in loaded.runs] == [r.role for r in original.runs]
    for lr, orr in zip(loaded.runs, original.runs):
        for lf, of in zip(lr.frames, orr.frames):
            assert np.array_equal(lf, of)


def test_round_trip_is_bit_exact(rng):
    original = _small_trace(rng)
    first = trace_bytes(original)
    second = trace_bytes(read_trace_from_bytes(first))
    assert first == second


def read_trace_from_bytes(blob: bytes) -> TraceFile:
    import io

    return read_trace(io.BytesIO(blob))


def test_payload_size_arithmetic(rng):
    t = _small_trace(rng)  # 2 runs, T=3, 8x8x1
    blob = trace_bytes(t)
    (header_len,) = struct.unpack("<I", blob[4:8])
    assert len(blob) == 8 + header_len + 2 * 3 * 64 * 4


def test_invalid_dims_rejected_before_write(rng, tmp_path):
    t = _small_trace(rng)
    t.runs[0].frames[1] = rng.standard_normal((1, 4, 4)).astype(np.float32)
    path = tmp_path / "bad.fstr"
    with pytest.raises(InvalidInputError):
        write_trace(t, path)
    assert not path.exists()


def test_role_pair_required(rng):
    t = _small_trace(rng, roles=("content",))
    with pytest.raises(InvalidInputError):
        trace_bytes(t)


def test_wrong_magic(rng):
    blob = b"XXXX" + trace_bytes(_small_trace(rng))[4:]
    with pytest.raises(FormatError):
        read_trace_from_bytes(blob)


def test_truncated_payload_reports_counts(rng):
    blob = trace_bytes(_small_trace(rng))
    with pytest.raises(TruncatedPayloadError) as err:
        read_trace_from_bytes(blob[:-10])
    assert err.value.expected == len(blob)
    assert err.value.actual == len(blob) - 10


def test_nan_payload_rejected(rng):
    t = _small_trace(rng)
    t.runs[0].frames[0][0, 0, 0] = np.nan
    blob = trace_bytes_unchecked(t)
    with pytest.raises(DataError):
        read_trace_from_bytes(blob)


def trace_bytes_unchecked(t: TraceFile) -> bytes:
    # Assemble bytes without the writer's validation, to exercise the reader.
    import io
    import json

    header = json.dumps(
        {
            "version": 1,
            "total_steps": t.total_steps,
            "height": t.height,
            "width": t.width,
            "channels": t.channels,
            "seed": t.seed,
            "runs": [{"role": r.role} for r in t.runs],
            "annotations": t.annotations,
        },
        sort_keys=True,
    ).encode()
    buf = io.BytesIO()
    buf.write(b"FSTR")
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    for run in t.runs:
        for frame in run.frames:
            buf.write(np.ascontiguousarray(frame, dtype="<f4").tobytes())
    return buf.getvalue()


def test_unsupported_version(rng):
    blob = trace_bytes(_small_trace(rng))
    tampered = blob.replace(b'"version": 1', b'"version": 9', 1)
    with pytest.raises(FormatError):
        read_trace_from_bytes(tampered)


def test_golden_fixture_parses():
    t = read_trace(GOLDEN)
    assert t.total_steps == 6
    assert (t.height, t.width, t.channels) == (16, 16, 1)
    assert t.seed == 4242
    assert {r.role for r in t.runs} == {
        "content",
        "base_on_content_path",
        "style",
        "base_on_style_path",
    }


def test_zero_profile_when_adapter_equals_base(rng):
    frames = [rng.standard_normal((1, 8, 8)).astype(np.float32) for _ in range(4)]
    t = TraceFile(
        total_steps=4,
        height=8,
        width=8,
        channels=1,
        seed=1,
        runs=[
            TraceRun(role="content", frames=list(frames)),
            TraceRun(role="base_on_content_path", frames=list(frames)),
        ],
    )
    profile = trace.profile_from_trace(t, "content", "freq2")
    assert profile.deltas == [0.0] * 4
    assert profile.source == "trace"


def test_missing_role_raises():
    t = read_trace(GOLDEN)
    t.runs = [r for r in t.runs if r.role != "style"]
    with pytest.raises(MissingRunError):
        trace.profile_from_trace(t, "style", "freq2")


def test_toy_and_trace_profiles_are_identical(tmp_path):
    spec_c = toy.DenoiserSpec(target=toy.make_content_target(11, 16, 16), band_hi=0.3)
    spec_s = toy.DenoiserSpec(target=toy.make_style_target(22, 16, 16), band_lo=0.35, band_hi=0.9)
    base = toy.DenoiserSpec(target=np.zeros((1, 16, 16)))
    base_fn = toy.as_denoiser(base)

    exported = trace.trace_from_toy(
        base_fn, toy.as_denoiser(spec_c), toy.as_denoiser(spec_s), 6, 4242, 16, 16
    )
    path = tmp_path / "export.fstr"
    write_trace(exported, path)
    reloaded = read_trace(path)

    for role, spec in (("content", spec_c), ("style", spec_s)):
        for metric in ("freq2", "spatial1"):
            direct = profiling.profile_adapter(
                base_fn, toy.as_denoiser(spec), 6, 4242, metric, height=16, width=16, adapter_id=role
            )
            via_trace = trace.profile_from_trace(reloaded, role, metric)
            assert via_trace.deltas == direct.deltas  # bit-exact


def test_golden_fixture_metric_sensitivity():
    t = read_trace(GOLDEN)
    freq = trace.profile_from_trace(t, "content", "freq2")
    spatial = trace.profile_from_trace(t, "content", "spatial2")
    assert freq.deltas != spatial.deltas


# Frozen freq2 deltas of the checked-in fixture (9 significant digits).
GOLDEN_CONTENT_DELTAS = [80.3150409, 14.5213169, 6.8521803, 4.26721114, 6.03416457, 2.12193273]
GOLDEN_STYLE_DELTAS = [0.0, 0.0, 34.1681076, 48.400864, 54.7439565, 44.0726497]


def test_golden_fixture_profile_regression():
    t = read_trace(GOLDEN)
    content = trace.profile_from_trace(t, "content", "freq2")
    style = trace.profile_from_trace(t, "style", "freq2")
    assert content.deltas == pytest.approx(GOLDEN_CONTENT_DELTAS, rel=1e-8)
    assert style.deltas == pytest.approx(GOLDEN_STYLE_DELTAS, rel=1e-8, abs=1e-12)
