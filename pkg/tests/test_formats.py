import logging
import math
import struct

import numpy as np
import pytest

from gplab.core import EllipseParams, EllipseRecord
from gplab.errors import (
    BadMagic,
    InconsistentDimensions,
    ParseError,
    ShapeMismatch,
    TruncatedFile,
    UnreadableFile,
)
from gplab.formats import (
    CSV_FIELDS,
    atomic_write_bytes,
    read_ellipse_csv,
    read_f32v,
    read_mask_stack,
    read_pgm,
    slice_name,
    write_ellipse_csv,
    write_f32v,
    write_mask_stack,
    write_pgm,
)


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    mask = (rng.random((13, 9)) < 0.5).astype(np.uint8)
    path = tmp_path / "m.pgm"
    write_pgm(path, mask)
    assert np.array_equal(read_pgm(path), mask)


def test_pgm_on_disk_layout(tmp_path):
    mask = np.zeros((2, 3), dtype=np.uint8)
    mask[0, 1] = 1
    path = tmp_path / "m.pgm"
    write_pgm(path, mask)
    data = path.read_bytes()
    assert data == b"P5\n3 2\n255\n" + bytes([0, 255, 0, 0, 0, 0])


def test_pgm_reads_comments_and_any_nonzero(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n# more\n7\n" + bytes([0, 3, 7, 0]))
    mask = read_pgm(path)
    assert mask.tolist() == [[0, 1], [1, 0]]


def test_pgm_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
    with pytest.raises(UnreadableFile):
        read_pgm(p)
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 0]))  # short raster
    with pytest.raises(UnreadableFile):
        read_pgm(p)
    p.write_bytes(b"P5\n2 x\n255\n" + bytes(4))
    with pytest.raises(UnreadableFile):
        read_pgm(p)
    with pytest.raises(UnreadableFile):
        read_pgm(tmp_path / "missing.pgm")


def test_write_pgm_requires_2d(tmp_path):
    with pytest.raises(ShapeMismatch):
        write_pgm(tmp_path / "x.pgm", np.zeros((2, 2, 2)))


def test_slice_names_sort_with_depth():
    assert slice_name(0, 16) == "slice_0000.pgm"
    assert slice_name(15, 16) == "slice_0015.pgm"
    assert slice_name(3, 20000) == "slice_00003.pgm"
    names = [slice_name(k, 12) for k in range(12)]
    assert names == sorted(names)


def test_mask_stack_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    vol = (rng.random((5, 8, 6)) < 0.5).astype(np.uint8)
    d = tmp_path / "stack"
    write_mask_stack(d, vol)
    assert sorted(p.name for p in d.iterdir()) == [
        slice_name(k, 5) for k in range(5)
    ]
    assert np.array_equal(read_mask_stack(d), vol)


def test_mask_stack_reads_lexicographic(tmp_path):
    d = tmp_path / "stack"
    d.mkdir()
    a = np.zeros((2, 2), dtype=np.uint8)
    b = np.ones((2, 2), dtype=np.uint8)
    write_pgm(d / "b_second.pgm", b)
    write_pgm(d / "a_first.pgm", a)
    vol = read_mask_stack(d)
    assert not vol[0].any()
    assert vol[1].all()


def test_mask_stack_errors(tmp_path):
    with pytest.raises(UnreadableFile):
        read_mask_stack(tmp_path / "missing")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(UnreadableFile):
        read_mask_stack(empty)
    mixed = tmp_path / "mixed"
    mixed.mkdir()
    write_pgm(mixed / "a.pgm", np.zeros((2, 2), dtype=np.uint8))
    write_pgm(mixed / "b.pgm", np.zeros((3, 2), dtype=np.uint8))
    with pytest.raises(InconsistentDimensions):
        read_mask_stack(mixed)


def test_f32v_single_voxel_layout(tmp_path):
    path = tmp_path / "one.f32v"
    write_f32v(path, np.ones((1, 1, 1), dtype=np.float32))
    data = path.read_bytes()
    assert len(data) == 21
    assert data[:4] == b"F32V"
    assert data[4] == 1
    assert struct.unpack("<3I", data[5:17]) == (1, 1, 1)
    assert data[17:] == b"\x00\x00\x80\x3f"  # 1.0 as little-endian float32


def test_f32v_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    vol = rng.standard_normal((4, 7, 5)).astype(np.float32)
    path = tmp_path / "v.f32v"
    write_f32v(path, vol)
    back = read_f32v(path)
    assert back.dtype == np.float32
    assert np.array_equal(back.view(np.uint32), vol.view(np.uint32))


def test_f32v_accepts_float64_input(tmp_path):
    vol = np.full((2, 2, 2), 1.0 / 3.0)
    path = tmp_path / "v.f32v"
    write_f32v(path, vol)
    assert np.allclose(read_f32v(path), vol, atol=1e-7)


def test_f32v_rejects_corrupt_files(tmp_path):
    path = tmp_path / "v.f32v"
    write_f32v(path, np.zeros((2, 3, 4)))
    good = path.read_bytes()

    bad = tmp_path / "bad.f32v"
    bad.write_bytes(b"G32V" + good[4:])
    with pytest.raises(BadMagic):
        read_f32v(bad)
    bad.write_bytes(good[:4] + b"\x09" + good[5:])
    with pytest.raises(BadMagic):
        read_f32v(bad)
    bad.write_bytes(good[:-4])
    with pytest.raises(TruncatedFile):
        read_f32v(bad)
    bad.write_bytes(good + b"\x00")
    with pytest.raises(TruncatedFile):
        read_f32v(bad)
    bad.write_bytes(good[:10])
    with pytest.raises(TruncatedFile):
        read_f32v(bad)
    zero = struct.pack("<4sB3I", b"F32V", 1, 0, 2, 2)
    bad.write_bytes(zero)
    with pytest.raises(UnreadableFile):
        read_f32v(bad)
    with pytest.raises(UnreadableFile):
        read_f32v(tmp_path / "missing.f32v")


def test_f32v_requires_3d():
    with pytest.raises(ShapeMismatch):
        write_f32v("/tmp/never-written.f32v", np.zeros((4, 4)))


def test_csv_round_trip_bit_exact(tmp_path):
    records = [
        EllipseRecord(0, EllipseParams(12.25, 9.75, 5.5, 2.25, 0.0)),
        EllipseRecord(3, EllipseParams(1e-3, 200.0, 40.0, 39.0, -1.2345678901234567)),
        EllipseRecord(2, EllipseParams(7.0, 7.0, 3.0, 3.0, 0.0)),
    ]
    path = tmp_path / "e.csv"
    write_ellipse_csv(path, records)
    back = read_ellipse_csv(path)
    assert back == sorted(records, key=lambda r: r.slice_index)
    # writing what was read reproduces the file byte for byte
    twice = tmp_path / "e2.csv"
    write_ellipse_csv(twice, back)
    assert twice.read_bytes() == path.read_bytes()


def test_csv_header_and_layout(tmp_path):
    path = tmp_path / "e.csv"
    write_ellipse_csv(
        path, [EllipseRecord(1, EllipseParams(2.0, 3.0, 4.0, 1.0, 0.5))]
    )
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert lines[1] == "1,2.0,3.0,4.0,1.0,0.5"
    assert text.endswith("\n")


def test_csv_canonicalizes_rows_with_warning(tmp_path, caplog):
    path = tmp_path / "raw.csv"
    path.write_text(
        ",".join(CSV_FIELDS) + "\n" + "0,10.0,10.0,3.0,5.0,0.0\n"
    )
    with caplog.at_level(logging.WARNING, logger="gplab.formats"):
        records = read_ellipse_csv(path)
    assert any("non-canonical" in r.message for r in caplog.records)
    p = records[0].params
    assert p.semi_major == 5.0
    assert p.semi_minor == 3.0
    assert abs(p.theta - math.pi / 2) < 1e-15


def test_csv_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    header = ",".join(CSV_FIELDS)

    path.write_text("slice,cx\n")
    with pytest.raises(ParseError, match=":1:"):
        read_ellipse_csv(path)

    path.write_text(header + "\n0,1.0,2.0,3.0\n")
    with pytest.raises(ParseError, match=":2:"):
        read_ellipse_csv(path)

    path.write_text(header + "\n0,1.0,2.0,3.0,1.0,0.0\n0,1.0,2.0,3.0,1.0,0.0\n")
    with pytest.raises(ParseError, match="duplicate"):
        read_ellipse_csv(path)

    path.write_text(header + "\n-1,1.0,2.0,3.0,1.0,0.0\n")
    with pytest.raises(ParseError, match="negative"):
        read_ellipse_csv(path)

    path.write_text(header + "\n0,1.0,2.0,abc,1.0,0.0\n")
    with pytest.raises(ParseError):
        read_ellipse_csv(path)

    path.write_text(header + "\n0,1.0,2.0,0.0,1.0,0.0\n")
    with pytest.raises(ParseError, match=":2:"):
        read_ellipse_csv(path)


def test_csv_skips_blank_lines(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text(
        ",".join(CSV_FIELDS) + "\n\n0,1.0,2.0,3.0,1.0,0.0\n\n"
    )
    assert len(read_ellipse_csv(path)) == 1


def test_atomic_write_replaces_and_leaves_no_temps(tmp_path):
    path = tmp_path / "data.bin"
    atomic_write_bytes(path, b"first")
    atomic_write_bytes(path, b"second")
    assert path.read_bytes() == b"second"
    assert [p.name for p in tmp_path.iterdir()] == ["data.bin"]
