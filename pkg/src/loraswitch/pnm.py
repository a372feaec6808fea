"""Portable graymap/pixmap output for final frames (no codec dependency)."""

from __future__ import annotations

import numpy as np

from .errors import FormatError, InvalidInputError
from .signal import as_image


def to_bytes(img) -> bytes:
    """Encode a (C, H, W) image as binary PGM (1 channel) or PPM (3)."""
    arr = as_image(img)
    c, h, w = arr.shape
    lo, hi = float(arr.min()), float(arr.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    quantized = np.clip(np.round((arr - lo) * scale), 0, 255).astype(np.uint8)
    if c == 1:
        header = f"P5\n{w} {h}\n255\n".encode("ascii")
        return header + quantized[0].tobytes()
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + np.moveaxis(quantized, 0, -1).tobytes()  # interleave to RGB rows


def write_pnm(img, path) -> str:
    """Write the image, fixing the extension to match the format. Returns the path used."""
    arr = as_image(img)
    suffix = ".pgm" if arr.shape[0] == 1 else ".ppm"
    out = str(path)
    if not out.endswith(suffix):
        out += suffix
    with open(out, "wb") as fh:
        fh.write(to_bytes(arr))
    return out


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM/PPM back into (C, H, W) float64 in [0, 255]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    if len(fields) < 4:
        raise FormatError(f"{path}: truncated PNM header")
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    pos += 1  # single whitespace after maxval
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"{path}: unsupported PNM magic {magic!r}")
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {maxval}")
    data = np.frombuffer(blob, dtype=np.uint8, offset=pos)
    if data.size != w * h * channels:
        raise InvalidInputError(f"{path}: expected {w * h * channels} samples, got {data.size}")
    if channels == 1:
        return data.reshape(1, h, w).astype(np.float64)
    return np.moveaxis(data.reshape(h, w, 3), -1, 0).astype(np.float64)
