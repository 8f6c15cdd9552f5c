"""PGM mask stacks, F32V float volumes, and ellipse CSV tables.

All writers go through a temp-file rename in the target directory, so a
failed write never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .core import EllipseRecord, canonicalize_ellipse
from .errors import (
    BadMagic,
    InconsistentDimensions,
    ParseError,
    ShapeMismatch,
    TruncatedFile,
    UnreadableFile,
)

log = logging.getLogger(__name__)

F32V_MAGIC = b"F32V"
F32V_VERSION = 1
CSV_FIELDS = ("slice", "cx", "cy", "semi_major", "semi_minor", "theta_rad")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes to path via a temp file + rename in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# --- PGM (P5, 8-bit) ---------------------------------------------------


def _pgm_tokens(data: bytes, path):
    """First three header tokens of a PGM, honoring '#' comments."""
    tokens = []
    i = 2  # past the magic
    while len(tokens) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise UnreadableFile(f"{path}: truncated PGM header")
        tokens.append(data[start:i])
    return tokens, i + 1  # header ends after one whitespace byte


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM as a {0, 1} uint8 mask; nonzero is foreground."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    if data[:2] != b"P5":
        raise UnreadableFile(f"{path}: not a binary PGM (magic {data[:2]!r})")
    tokens, offset = _pgm_tokens(data, path)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise UnreadableFile(f"{path}: non-numeric PGM header {tokens!r}")
    if width < 1 or height < 1:
        raise UnreadableFile(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise UnreadableFile(f"{path}: unsupported maxval {maxval}")
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise UnreadableFile(
            f"{path}: expected {width * height} raster bytes, got {len(raster)}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return (pixels != 0).astype(np.uint8)


def write_pgm(path, mask) -> None:
    """Write a binary mask as P5 with maxval 255; foreground becomes 255."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ShapeMismatch(f"mask must be 2-D, got shape {m.shape}")
    height, width = m.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    raster = np.where(m != 0, 255, 0).astype(np.uint8).tobytes()
    atomic_write_bytes(path, header + raster)


def slice_name(index: int, depth: int) -> str:
    digits = max(4, len(str(max(depth - 1, 0))))
    return f"slice_{index:0{digits}d}.pgm"


def read_mask_stack(dirpath) -> np.ndarray:
    """Read every .pgm in a directory (lexicographic order) as a volume."""
    directory = Path(dirpath)
    if not directory.is_dir():
        raise UnreadableFile(f"{directory}: not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix == ".pgm")
    if not files:
        raise UnreadableFile(f"{directory}: no .pgm files")
    slices = [read_pgm(p) for p in files]
    shapes = {s.shape for s in slices}
    if len(shapes) > 1:
        raise InconsistentDimensions(
            f"{directory}: slice dimensions differ: {sorted(shapes)}"
        )
    return np.stack(slices)


def write_mask_stack(dirpath, volume) -> None:
    """Write a (depth, h, w) binary volume as zero-padded slice PGMs."""
    v = np.asarray(volume)
    if v.ndim != 3:
        raise ShapeMismatch(f"volume must be 3-D, got shape {v.shape}")
    directory = Path(dirpath)
    directory.mkdir(parents=True, exist_ok=True)
    depth = v.shape[0]
    for k in range(depth):
        write_pgm(directory / slice_name(k, depth), v[k])


# --- F32V --------------------------------------------------------------


_F32V_HEADER = struct.Struct("<4sB3I")


def read_f32v(path) -> np.ndarray:
    """Read an F32V container as a (depth, height, width) float32 volume."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    if len(data) < _F32V_HEADER.size:
        raise TruncatedFile(f"{path}: {len(data)} bytes is shorter than a header")
    magic, version, depth, height, width = _F32V_HEADER.unpack_from(data)
    if magic != F32V_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r}, expected {F32V_MAGIC!r}")
    if version != F32V_VERSION:
        raise BadMagic(f"{path}: unsupported version {version}")
    if min(depth, height, width) < 1:
        raise UnreadableFile(
            f"{path}: zero dimension in {depth}x{height}x{width}"
        )
    expected = _F32V_HEADER.size + depth * height * width * 4
    if len(data) != expected:
        raise TruncatedFile(f"{path}: expected {expected} bytes, got {len(data)}")
    payload = np.frombuffer(data, dtype="<f4", offset=_F32V_HEADER.size)
    return payload.reshape(depth, height, width).copy()


def write_f32v(path, volume) -> None:
    """Write a volume as F32V: magic, version, u32 dims, little-endian f32."""
    v = np.asarray(volume)
    if v.ndim != 3:
        raise ShapeMismatch(f"volume must be 3-D, got shape {v.shape}")
    depth, height, width = v.shape
    header = _F32V_HEADER.pack(F32V_MAGIC, F32V_VERSION, depth, height, width)
    payload = np.ascontiguousarray(v, dtype="<f4").tobytes()
    atomic_write_bytes(path, header + payload)


# --- ellipse CSV -------------------------------------------------------


def read_ellipse_csv(path) -> list:
    """Read ellipse records, canonicalizing each row.

    Rows whose parameters are not already canonical (axes ordered, angle
    reduced) are fixed with a warning. Returns records sorted by slice.
    """
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not an ASCII table ({exc})") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_FIELDS:
        found = rows[0] if rows else []
        raise ParseError(
            f"{path}:1: header must be {','.join(CSV_FIELDS)}, got "
            f"{','.join(found)}"
        )
    records = []
    seen = set()
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_FIELDS):
            raise ParseError(f"{path}:{line_no}: expected 6 fields, got {len(row)}")
        try:
            index = int(row[0])
            cx, cy, r1, r2, angle = (float(v) for v in row[1:])
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from exc
        if index < 0:
            raise ParseError(f"{path}:{line_no}: negative slice index {index}")
        if index in seen:
            raise ParseError(f"{path}:{line_no}: duplicate slice index {index}")
        seen.add(index)
        try:
            params = canonicalize_ellipse(cx, cy, r1, r2, angle)
        except Exception as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from exc
        if (
            abs(params.semi_major - r1) > 1e-12
            or abs(params.semi_minor - r2) > 1e-12
            or abs(params.theta - angle) > 1e-12
        ):
            log.warning(
                "%s:%d: non-canonical ellipse row fixed "
                "(axes %.6g/%.6g angle %.6g -> %.6g/%.6g angle %.6g)",
                path, line_no, r1, r2, angle,
                params.semi_major, params.semi_minor, params.theta,
            )
        records.append(EllipseRecord(index, params))
    records.sort(key=lambda r: r.slice_index)
    return records


def write_ellipse_csv(path, records) -> None:
    """Write records sorted by slice; floats keep full round-trip precision."""
    lines = [",".join(CSV_FIELDS)]
    for rec in sorted(records, key=lambda r: r.slice_index):
        p = rec.params
        lines.append(
            f"{rec.slice_index},{p.cx!r},{p.cy!r},"
            f"{p.semi_major!r},{p.semi_minor!r},{p.theta!r}"
        )
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))
