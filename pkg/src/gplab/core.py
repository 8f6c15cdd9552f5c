"""Shared geometry types, canonical forms, and volume validation.

Coordinate convention used everywhere: x runs along columns, y along rows,
the origin sits at the center of pixel (0, 0), and angles are measured in
radians from the +x axis toward +y. Volumes are indexed (slice, row, col).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonPositiveAxis,
    NotAnEllipse,
    OutOfRangeValue,
    ShapeMismatch,
)

HALF_PI = math.pi / 2.0

# relative w-h gap below which an ellipse is treated as a circle
CIRCLE_REL_TOL = 1e-9


@dataclass(frozen=True)
class EllipseParams:
    """Canonical ellipse: center, semi-axes with w >= h > 0, tilt theta.

    theta is the angle of the major axis, reduced to [-pi/2, pi/2].
    Circles carry theta = 0.
    """

    cx: float
    cy: float
    semi_major: float
    semi_minor: float
    theta: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.semi_major, self.semi_minor, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise NonPositiveAxis(f"non-finite ellipse parameters {vals}")
        if self.semi_major <= 0.0 or self.semi_minor <= 0.0:
            raise NonPositiveAxis(
                f"semi-axes must be positive, got "
                f"({self.semi_major}, {self.semi_minor})"
            )
        if self.semi_minor > self.semi_major:
            raise NonPositiveAxis(
                f"semi-minor {self.semi_minor} exceeds semi-major {self.semi_major}"
            )
        if abs(self.theta) > HALF_PI + 1e-12:
            raise NonPositiveAxis(f"theta {self.theta} outside [-pi/2, pi/2]")


@dataclass(frozen=True)
class EllipseRecord:
    """One ellipse pinned to a slice of a volume."""

    slice_index: int
    params: EllipseParams

    def __post_init__(self):
        if self.slice_index < 0:
            raise ShapeMismatch(f"negative slice index {self.slice_index}")


def canonicalize_ellipse(cx, cy, r1, r2, angle) -> EllipseParams:
    """Bring raw (cx, cy, r1, r2, angle) into canonical form.

    The larger radius becomes the semi-major axis; if the two are swapped
    the angle gains pi/2. The angle is then reduced into [-pi/2, pi/2] by
    multiples of pi. Circles (relative gap <= 1e-9) get angle 0.
    """
    for v in (cx, cy, r1, r2, angle):
        if not math.isfinite(v):
            raise NonPositiveAxis(f"non-finite ellipse parameter {v}")
    if r1 <= 0.0 or r2 <= 0.0:
        raise NonPositiveAxis(f"semi-axes must be positive, got ({r1}, {r2})")
    if r1 >= r2:
        w, h = r1, r2
    else:
        w, h = r2, r1
        angle += HALF_PI
    if w - h <= CIRCLE_REL_TOL * w:
        angle = 0.0
    else:
        angle = math.fmod(angle, math.pi)
        if angle > HALF_PI:
            angle -= math.pi
        elif angle < -HALF_PI:
            angle += math.pi
    return EllipseParams(float(cx), float(cy), float(w), float(h), float(angle))


@dataclass(frozen=True)
class ConicCoefficients:
    """Ellipse conic a x^2 + b xy + c y^2 + d x + e y + f = 0.

    Stored in the canonical gauge: unit Euclidean norm with a > 0 (the
    coefficient vector is only defined up to scale). The gauge makes the
    eigenvalue-to-axis assignment in parameter extraction unambiguous.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    @classmethod
    def from_vector(cls, vec) -> "ConicCoefficients":
        v = np.asarray(vec, dtype=float).reshape(-1)
        if v.shape != (6,):
            raise ShapeMismatch(f"conic needs 6 coefficients, got {v.shape}")
        if not np.isfinite(v).all():
            raise NotAnEllipse(f"non-finite conic coefficients {v.tolist()}")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise NotAnEllipse("all-zero conic coefficients")
        v = v / norm
        if v[0] < 0.0:
            v = -v
        a, b, c = v[0], v[1], v[2]
        if b * b - 4.0 * a * c >= 0.0:
            raise NotAnEllipse(
                f"discriminant {b * b - 4.0 * a * c:.6g} is not negative"
            )
        return cls(*(float(t) for t in v))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.e, self.f])

    @property
    def discriminant(self) -> float:
        return self.b * self.b - 4.0 * self.a * self.c


_VOLUME_KINDS = ("mask", "heatmap")


def validate_volume(values, shape, kind) -> np.ndarray:
    """Check flat or shaped data against a declared (depth, height, width).

    kind "mask" requires every value in {0, 1}; kind "heatmap" requires
    finite values in [0, 1]. Returns the data reshaped to the declared
    shape, dtype preserved.
    """
    if kind not in _VOLUME_KINDS:
        raise ValueError(f"kind must be one of {_VOLUME_KINDS}, got {kind!r}")
    try:
        d, h, w = (int(s) for s in shape)
    except (TypeError, ValueError):
        raise ShapeMismatch(f"volume shape must be 3 integers, got {shape!r}")
    if d < 1 or h < 1 or w < 1:
        raise ShapeMismatch(f"volume dimensions must be >= 1, got {(d, h, w)}")
    arr = np.asarray(values)
    if arr.size != d * h * w:
        raise ShapeMismatch(
            f"declared {d}x{h}x{w} = {d * h * w} elements, data has {arr.size}"
        )
    arr = arr.reshape(d, h, w)
    if kind == "mask":
        if not np.isin(arr, (0, 1)).all():
            bad = arr[~np.isin(arr, (0, 1))].ravel()[0]
            raise OutOfRangeValue(f"mask value {bad!r} is not 0 or 1")
    else:
        vals = arr.astype(float, copy=False)
        if not np.isfinite(vals).all():
            raise OutOfRangeValue("heatmap contains non-finite values")
        lo, hi = float(vals.min()), float(vals.max())
        if lo < 0.0 or hi > 1.0:
            raise OutOfRangeValue(f"heatmap values span [{lo:.6g}, {hi:.6g}]")
    return arr
