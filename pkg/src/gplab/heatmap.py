"""Parametric elliptical Gaussian maps and binarization.

The map value at a point is exp(-ln2 * (px^2/w^2 + py^2/h^2)), where
(px, py) are the point's offsets from the center rotated into the ellipse
frame. It is 1 at the center, exactly 0.5 on the ellipse outline, and
falls off with per-axis widths sigma_x = w / sqrt(ln 4),
sigma_y = h / sqrt(ln 4).
"""

from __future__ import annotations

import math

import numpy as np

from .core import EllipseParams, EllipseRecord
from .errors import (
    DegenerateEllipse,
    IndexOutOfRange,
    InvalidSize,
    OutOfRangeThreshold,
    ShapeMismatch,
)

LN2 = math.log(2.0)

# semi-axes below half a pixel cannot be represented on the grid
MIN_AXIS_PX = 0.5


def evaluate_heatmap(params: EllipseParams, x, y):
    """Analytic map value at continuous coordinates (vectorized)."""
    cos_t = math.cos(params.theta)
    sin_t = math.sin(params.theta)
    mx = np.asarray(x, dtype=float) - params.cx
    my = np.asarray(y, dtype=float) - params.cy
    px = mx * cos_t + my * sin_t
    py = my * cos_t - mx * sin_t
    q = px * px / params.semi_major**2 + py * py / params.semi_minor**2
    return np.exp(-LN2 * q)


def generate_heatmap(params: EllipseParams, n: int) -> np.ndarray:
    """n x n map sampled at pixel centers (integer coordinates).

    Centers may lie off the grid; the map is then just the visible part.
    Ellipses thinner than half a pixel are rejected.
    """
    if int(n) != n or n < 2:
        raise InvalidSize(f"grid size must be an integer >= 2, got {n!r}")
    n = int(n)
    if params.semi_minor < MIN_AXIS_PX or params.semi_major < MIN_AXIS_PX:
        raise DegenerateEllipse(
            f"semi-axes ({params.semi_major}, {params.semi_minor}) below "
            f"{MIN_AXIS_PX} px"
        )
    coords = np.arange(n, dtype=float)
    return evaluate_heatmap(params, coords[None, :], coords[:, None])


def heatmap_grids(params: EllipseParams, n: int) -> dict:
    """Step-by-step field construction, returned as named grids.

    Keeps every intermediate of the closed form: the coordinate grids, the
    center offsets, the rotated frame, and the per-axis falloffs whose
    product is the final map ("value", equal to generate_heatmap up to
    floating-point rounding of the factored exponentials).
    """
    if int(n) != n or n < 2:
        raise InvalidSize(f"grid size must be an integer >= 2, got {n!r}")
    n = int(n)
    if params.semi_minor < MIN_AXIS_PX or params.semi_major < MIN_AXIS_PX:
        raise DegenerateEllipse(
            f"semi-axes ({params.semi_major}, {params.semi_minor}) below "
            f"{MIN_AXIS_PX} px"
        )
    cos_t = math.cos(params.theta)
    sin_t = math.sin(params.theta)
    coord_y, coord_x = np.mgrid[0:n, 0:n].astype(float)
    offset_x = coord_x - params.cx
    offset_y = coord_y - params.cy
    aligned_x = offset_x * cos_t + offset_y * sin_t
    aligned_y = offset_y * cos_t - offset_x * sin_t
    falloff_x = np.exp(-LN2 * aligned_x**2 / params.semi_major**2)
    falloff_y = np.exp(-LN2 * aligned_y**2 / params.semi_minor**2)
    return {
        "coord_x": coord_x,
        "coord_y": coord_y,
        "offset_x": offset_x,
        "offset_y": offset_y,
        "aligned_x": aligned_x,
        "aligned_y": aligned_y,
        "falloff_x": falloff_x,
        "falloff_y": falloff_y,
        "value": falloff_x * falloff_y,
    }


def stack_heatmaps(records, depth: int, n: int) -> np.ndarray:
    """Assemble per-slice maps into a (depth, n, n) volume.

    Slices without a record stay zero. Record indices must be unique and
    inside [0, depth).
    """
    if int(depth) != depth or depth < 1:
        raise InvalidSize(f"depth must be an integer >= 1, got {depth!r}")
    depth = int(depth)
    volume = np.zeros((depth, int(n), int(n)), dtype=float)
    seen = set()
    for rec in records:
        if not isinstance(rec, EllipseRecord):
            raise TypeError(f"expected EllipseRecord, got {type(rec).__name__}")
        k = rec.slice_index
        if k < 0 or k >= depth:
            raise IndexOutOfRange(f"slice index {k} outside [0, {depth})")
        if k in seen:
            raise ValueError(f"duplicate record for slice {k}")
        seen.add(k)
        volume[k] = generate_heatmap(rec.params, int(n))
    return volume


def threshold(values, t: float) -> np.ndarray:
    """Binarize a map or volume at level t, strictly greater-than.

    t must lie strictly inside (0, 1). Returns uint8 zeros and ones with
    the input's shape.
    """
    if not (0.0 < t < 1.0) or not math.isfinite(t):
        raise OutOfRangeThreshold(f"threshold must be in (0, 1), got {t!r}")
    return (np.asarray(values) > t).astype(np.uint8)


def elementwise_product(heat, mask) -> np.ndarray:
    """Zero a map outside a binary mask (element-wise multiplication)."""
    p = np.asarray(heat, dtype=float)
    s = np.asarray(mask)
    if p.shape != s.shape:
        raise ShapeMismatch(f"shapes {p.shape} and {s.shape} differ")
    return p * (s != 0)
