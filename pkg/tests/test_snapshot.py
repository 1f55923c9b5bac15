import io
import json

import numpy as np
import pytest

from shadowlab.field import draw_field, grid_for_kernel
from shadowlab.kernels import make_kernel
from shadowlab.slope import slope_field
from shadowlab.snapshot import (
    MAGIC,
    SnapshotFormatError,
    read_snapshot,
    write_snapshot,
)

KERNEL = make_kernel("gaussian", (1.0, 1.0))


def small_sample(truncation=None):
    spec = grid_for_kernel(KERNEL, 0.5, 7, 5, truncation=truncation)
    return draw_field(KERNEL, spec, master_seed=11, sample_index=3,
                      truncation=truncation)


def test_field_roundtrip_is_bitwise() -> None:
    fs = small_sample()
    buf = io.BytesIO()
    header = write_snapshot(buf, fs)
    assert header["magic"] == MAGIC and header["kind"] == "field"
    buf.seek(0)
    back = read_snapshot(buf)
    assert back.spec == fs.spec
    assert back.kernel == fs.kernel
    assert back.seed == fs.seed
    assert back.truncation is None
    for name, arr in fs.arrays().items():
        assert np.array_equal(arr, getattr(back, name)), name


def test_truncated_field_keeps_cutoff_metadata() -> None:
    fs = small_sample(truncation=4.0)
    buf = io.BytesIO()
    write_snapshot(buf, fs)
    buf.seek(0)
    assert read_snapshot(buf).truncation == 4.0


def test_slope_roundtrip_keeps_margin_and_window() -> None:
    sf = slope_field(small_sample(), margin=3)
    buf = io.BytesIO()
    header = write_snapshot(buf, sf)
    assert header["kind"] == "slope"
    buf.seek(0)
    back = read_snapshot(buf)
    assert back.margin == 3 and back.window is None
    assert np.array_equal(back.alpha, sf.alpha)
    assert np.array_equal(back.argmax_t, sf.argmax_t)
    assert np.array_equal(back.gap, sf.gap)


def test_file_path_roundtrip(tmp_path) -> None:
    fs = small_sample()
    path = tmp_path / "sample.shdw"
    write_snapshot(path, fs)
    back = read_snapshot(path)
    assert np.array_equal(back.f, fs.f)


def test_header_is_one_json_line() -> None:
    buf = io.BytesIO()
    write_snapshot(buf, small_sample())
    buf.seek(0)
    head = json.loads(buf.readline().decode("utf-8"))
    assert head["dtype"] == "<f8" and head["order"] == "C"
    assert head["arrays"][0] == "f"
    assert head["seed"] == [11, 3]


def test_bad_magic_rejected() -> None:
    buf = io.BytesIO()
    write_snapshot(buf, small_sample())
    raw = bytearray(buf.getvalue())
    raw[raw.index(b"SHDW1"[0])] = ord("X")
    with pytest.raises(SnapshotFormatError):
        read_snapshot(io.BytesIO(bytes(raw)))


def test_truncated_payload_rejected() -> None:
    buf = io.BytesIO()
    write_snapshot(buf, small_sample())
    clipped = buf.getvalue()[:-16]
    with pytest.raises(SnapshotFormatError, match="bytes"):
        read_snapshot(io.BytesIO(clipped))


def test_garbage_header_rejected() -> None:
    with pytest.raises(SnapshotFormatError):
        read_snapshot(io.BytesIO(b"\x00\x01\x02 not json\n" + b"\x00" * 64))


def test_unknown_object_rejected() -> None:
    with pytest.raises(TypeError):
        write_snapshot(io.BytesIO(), object())
