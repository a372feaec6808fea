"""Adapter weight statistics from safetensors files.

Layout parsed: an 8-byte little-endian unsigned header length, a UTF-8
JSON header mapping tensor name -> {dtype, shape, data_offsets}, then one
contiguous byte buffer. Only 32- and 16-bit float tensors are decoded.
The per-file statistics expose the magnitude discrepancies between
independently trained adapters that make naive weight averaging fragile.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np

from .errors import FormatError, UnsupportedDtypeError

HIST_BINS = 64
HIST_LO = 1e-8
HIST_HI = 1e2

_DTYPES = {"F32": np.dtype("<f4"), "F16": np.dtype("<f2")}


def histogram_edges() -> np.ndarray:
    """65 log-spaced bin edges over [1e-8, 1e2]."""
    return np.logspace(np.log10(HIST_LO), np.log10(HIST_HI), HIST_BINS + 1)


@dataclass
class TensorStats:
    name: str
    element_count: int
    mean_abs: float
    std: float
    max_abs: float


@dataclass
class WeightStats:
    path: str
    tensors: List[TensorStats]
    total_elements: int
    mean_abs: float
    histogram: List[int] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "path": self.path,
            "total_elements": self.total_elements,
            "mean_abs": self.mean_abs,
            "tensors": [
                {
                    "name": t.name,
                    "element_count": t.element_count,
                    "mean_abs": t.mean_abs,
                    "std": t.std,
                    "max_abs": t.max_abs,
                }
                for t in self.tensors
            ],
            "histogram": {
                "bins": HIST_BINS,
                "lo": HIST_LO,
                "hi": HIST_HI,
                "counts": list(self.histogram),
            },
        }


def _parse_header(blob: bytes, path: str) -> tuple[dict, int]:
    if len(blob) < 8:
        raise FormatError(f"{path}: too short for a safetensors header length")
    (header_len,) = struct.unpack("<Q", blob[:8])
    if 8 + header_len > len(blob):
        raise FormatError(f"{path}: header length {header_len} points past end of file")
    try:
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed header JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header must be a JSON object")
    return header, 8 + header_len


def analyze_weights_file(path) -> WeightStats:
    """Stream tensors from one safetensors file and compute statistics."""
    p = Path(path)
    blob = p.read_bytes()
    header, data_start = _parse_header(blob, str(p))
    buffer = blob[data_start:]

    tensors: List[TensorStats] = []
    hist = np.zeros(HIST_BINS, dtype=np.int64)
    edges = histogram_edges()
    total_abs = 0.0
    total_elems = 0

    for name, meta in sorted(header.items()):
        if name == "__metadata__":
            continue
        try:
            dtype_name = meta["dtype"]
            shape = [int(s) for s in meta["shape"]]
            begin, end = (int(o) for o in meta["data_offsets"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{p}: tensor {name!r} has malformed metadata: {exc}") from exc
        if dtype_name not in _DTYPES:
            raise UnsupportedDtypeError(f"{p}: tensor {name!r} has unsupported dtype {dtype_name!r}")
        dtype = _DTYPES[dtype_name]
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if end - begin != count * dtype.itemsize or begin < 0 or end > len(buffer):
            raise FormatError(
                f"{p}: tensor {name!r} offsets [{begin}, {end}) inconsistent with shape {shape} and dtype {dtype_name}"
            )
        values = np.frombuffer(buffer[begin:end], dtype=dtype).astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{p}: tensor {name!r} contains non-finite values")
        abs_vals = np.abs(values)
        tensors.append(
            TensorStats(
                name=name,
                element_count=count,
                mean_abs=float(abs_vals.mean()) if count else 0.0,
                std=float(values.std()) if count else 0.0,
                max_abs=float(abs_vals.max()) if count else 0.0,
            )
        )
        # Clip into the histogram range so every element lands in a bin.
        clipped = np.clip(abs_vals, HIST_LO, HIST_HI)
        counts, _ = np.histogram(clipped, bins=edges)
        hist += counts
        total_abs += float(abs_vals.sum())
        total_elems += count

    return WeightStats(
        path=str(p),
        tensors=tensors,
        total_elements=total_elems,
        mean_abs=total_abs / total_elems if total_elems else 0.0,
        histogram=[int(c) for c in hist],
    )


def write_safetensors(path, arrays: Dict[str, np.ndarray], dtype: str = "F32") -> None:
    """Emit a minimal safetensors file (fixture construction and exports)."""
    if dtype not in _DTYPES:
        raise UnsupportedDtypeError(f"cannot write dtype {dtype!r}")
    np_dtype = _DTYPES[dtype]
    header: Dict[str, dict] = {}
    chunks: List[bytes] = []
    offset = 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype=np_dtype).tobytes()
        header[name] = {
            "dtype": dtype,
            "shape": list(np.asarray(arr).shape),
            "data_offsets": [offset, offset + len(data)],
        }
        chunks.append(data)
        offset += len(data)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for chunk in chunks:
            fh.write(chunk)
