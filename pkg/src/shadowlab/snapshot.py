"""Snapshot serialization.

One snapshot is a single JSON header line followed by the raw array bytes,
float64 little-endian, row-major, concatenated in the order the header
lists them.  The header carries the magic tag, the grid spec, the seed
pair, the kernel, and per-kind extras, so a snapshot is self-describing
and byte-for-byte reproducible from its metadata.
"""

from __future__ import annotations

import io
import json
from typing import BinaryIO

import numpy as np

from .field import FieldSample, GridSpec
from .kernels import Kernel

MAGIC = "SHDW1"
_DTYPE = "<f8"

_FIELD_ARRAYS = ("f", "df1", "df2", "d2f11", "d2f12", "d2f22")
_SLOPE_ARRAYS = ("alpha", "argmax_t", "gap")


class SnapshotFormatError(ValueError):
    """Bad magic, truncated payload, or malformed header."""


def _header_common(kind: str, spec: GridSpec, kernel, seed, truncation) -> dict:
    return {
        "magic": MAGIC,
        "kind": kind,
        "spec": spec.to_dict(),
        "kernel": kernel.to_dict() if kernel is not None else None,
        "seed": list(seed) if seed is not None else None,
        "truncation": truncation,
        "dtype": _DTYPE,
        "order": "C",
    }


def field_header(fs: FieldSample) -> dict:
    head = _header_common("field", fs.spec, fs.kernel, fs.seed, fs.truncation)
    head["arrays"] = list(_FIELD_ARRAYS)
    return head


def slope_header(sf) -> dict:
    head = _header_common("slope", sf.spec, sf.kernel, sf.seed, sf.truncation)
    head["arrays"] = list(_SLOPE_ARRAYS)
    head["margin"] = sf.margin
    head["window"] = sf.window
    return head


def _write(stream: BinaryIO, header: dict, arrays) -> None:
    stream.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
    for arr in arrays:
        stream.write(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes(order="C"))


def write_snapshot(path_or_stream, obj) -> dict:
    """Serialize a FieldSample or SlopeField; returns the header written."""
    from .slope import SlopeField

    if isinstance(obj, FieldSample):
        header = field_header(obj)
        arrays = [getattr(obj, n) for n in _FIELD_ARRAYS]
    elif isinstance(obj, SlopeField):
        header = slope_header(obj)
        arrays = [getattr(obj, n) for n in _SLOPE_ARRAYS]
    else:
        raise TypeError(f"cannot snapshot {type(obj).__name__}")
    if hasattr(path_or_stream, "write"):
        _write(path_or_stream, header, arrays)
    else:
        with open(path_or_stream, "wb") as fh:
            _write(fh, header, arrays)
    return header


def read_snapshot(path_or_stream):
    """Parse a snapshot back into a FieldSample or SlopeField.

    Validates the magic tag and that the payload length matches the header
    exactly before touching any bytes.
    """
    from .slope import SlopeField

    if hasattr(path_or_stream, "read"):
        stream = path_or_stream
        data = stream.read()
    else:
        with open(path_or_stream, "rb") as fh:
            data = fh.read()
    buf = io.BytesIO(data)
    line = buf.readline()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotFormatError(f"unreadable header: {exc}") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise SnapshotFormatError(f"bad magic, expected {MAGIC}")
    if header.get("dtype") != _DTYPE or header.get("order") != "C":
        raise SnapshotFormatError("unsupported payload encoding")

    spec = GridSpec.from_dict(header["spec"])
    names = header["arrays"]
    count = spec.ny * spec.nx
    payload = buf.read()
    expect = len(names) * count * 8
    if len(payload) != expect:
        raise SnapshotFormatError(
            f"payload is {len(payload)} bytes, header implies {expect}")
    arrays = {}
    for i, name in enumerate(names):
        raw = payload[i * count * 8:(i + 1) * count * 8]
        arrays[name] = np.frombuffer(raw, dtype=_DTYPE).reshape(spec.shape).copy()

    kernel = Kernel.from_dict(header["kernel"]) if header.get("kernel") else None
    seed = tuple(header["seed"]) if header.get("seed") else (0, 0)
    trunc = header.get("truncation")

    if header.get("kind") == "field":
        return FieldSample(spec=spec, kernel=kernel, seed=seed,
                           truncation=trunc, **arrays)
    if header.get("kind") == "slope":
        return SlopeField(
            spec=spec, kernel=kernel, seed=seed, truncation=trunc,
            window=header.get("window"), margin=int(header.get("margin", 0)),
            **arrays)
    raise SnapshotFormatError(f"unknown snapshot kind {header.get('kind')!r}")
