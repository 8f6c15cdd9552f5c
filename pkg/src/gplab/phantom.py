"""Seeded synthetic vessel phantoms: ellipse tracks, masks, and heatmaps.

A phantom is a stack of ellipses whose center, axes, and tilt drift
smoothly from slice to slice. The strong mask rasterizes each ellipse
with an optional smooth radial boundary perturbation; the pseudo volume
is the heatmap stack of the unperturbed ellipses. Everything derives from
one seeded generator, so a given spec reproduces bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EllipseRecord, canonicalize_ellipse
from .errors import InvalidSpec
from .heatmap import stack_heatmaps

# ellipse cross-sections stay clearly eccentric: near-circles make the
# fitted tilt ill-conditioned
_ASPECT_MIN = 1.25
_ASPECT_MAX = 2.2

_AXIS_STEP = 0.04    # per-slice log-scale axis wobble
_ASPECT_STEP = 0.03
_THETA_STEP = 0.06   # radians per slice


@dataclass(frozen=True)
class PhantomSpec:
    """Description of one phantom volume.

    The bulge multiplies both semi-axes by bulge_factor on slices
    bulge_start..bulge_end (inclusive); factor 1 disables it. perturb is
    the peak radial boundary displacement of the strong mask, in pixels.
    """

    seed: int
    depth: int = 16
    size: int = 256
    drift: float = 1.5
    axis_min: float = 20.0
    axis_max: float = 45.0
    perturb: float = 0.0
    bulge_factor: float = 1.0
    bulge_start: int = 0
    bulge_end: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise InvalidSpec(f"depth must be >= 1, got {self.depth}")
        if self.size < 16:
            raise InvalidSpec(f"grid size must be >= 16, got {self.size}")
        if self.axis_min < 2.0:
            raise InvalidSpec(f"axis_min must be >= 2 px, got {self.axis_min}")
        if self.axis_max < self.axis_min * _ASPECT_MIN:
            raise InvalidSpec(
                f"axis_max {self.axis_max} leaves no room above axis_min "
                f"{self.axis_min} at aspect {_ASPECT_MIN}"
            )
        if self.drift < 0.0 or self.perturb < 0.0:
            raise InvalidSpec("drift and perturb must be non-negative")
        if self.bulge_factor <= 0.0:
            raise InvalidSpec(f"bulge_factor must be positive, got {self.bulge_factor}")
        largest = self.axis_max * max(1.0, self.bulge_factor)
        if largest > self.size / 2.0 - 4.0:
            raise InvalidSpec(
                f"largest semi-axis {largest:.1f} px does not fit a "
                f"{self.size} px grid"
            )
        if self.bulge_factor != 1.0:
            if not 0 <= self.bulge_start <= self.bulge_end < self.depth:
                raise InvalidSpec(
                    f"bulge interval {self.bulge_start}..{self.bulge_end} "
                    f"outside 0..{self.depth - 1}"
                )


def _perturbed_mask(params, size, amplitude, mode, phase) -> np.ndarray:
    """Rasterize an ellipse whose outline is pushed radially by
    amplitude * cos(mode * angle + phase), in pixels."""
    cos_t = math.cos(params.theta)
    sin_t = math.sin(params.theta)
    coord_y, coord_x = np.mgrid[0:size, 0:size].astype(float)
    mx = coord_x - params.cx
    my = coord_y - params.cy
    ux = mx * cos_t + my * sin_t
    uy = my * cos_t - mx * sin_t
    dist = np.hypot(ux, uy)
    angle = np.arctan2(uy, ux)
    outline = 1.0 / np.sqrt(
        np.cos(angle) ** 2 / params.semi_major**2
        + np.sin(angle) ** 2 / params.semi_minor**2
    )
    offset = amplitude * np.cos(mode * angle + phase)
    return (dist <= outline + offset).astype(np.uint8)


def generate_phantom(spec: PhantomSpec):
    """Generate (records, strong_mask_volume, pseudo_heatmap_volume).

    records holds the canonical per-slice ellipses (bulge included); the
    strong masks add the boundary perturbation on top of them; the pseudo
    volume is their unperturbed heatmap stack.
    """
    rng = np.random.default_rng(spec.seed)
    size = spec.size
    margin = spec.axis_max * max(1.0, spec.bulge_factor) + 2.0
    lo, hi = margin, size - 1.0 - margin

    cx = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0)
    cy = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0)
    h = rng.uniform(spec.axis_min, spec.axis_max / _ASPECT_MIN)
    aspect = rng.uniform(_ASPECT_MIN, min(_ASPECT_MAX, spec.axis_max / h))
    theta = rng.uniform(-math.pi / 2.0, math.pi / 2.0)

    records = []
    wobble = []  # (mode, phase) of each slice's boundary perturbation
    for k in range(spec.depth):
        w_k, h_k = h * aspect, h
        if spec.bulge_factor != 1.0 and spec.bulge_start <= k <= spec.bulge_end:
            w_k *= spec.bulge_factor
            h_k *= spec.bulge_factor
        records.append(
            EllipseRecord(k, canonicalize_ellipse(cx, cy, w_k, h_k, theta))
        )
        wobble.append((int(rng.integers(2, 5)), rng.uniform(0.0, 2.0 * math.pi)))

        cx = float(np.clip(cx + rng.uniform(-spec.drift, spec.drift), lo, hi))
        cy = float(np.clip(cy + rng.uniform(-spec.drift, spec.drift), lo, hi))
        h = float(
            np.clip(
                h * math.exp(rng.uniform(-_AXIS_STEP, _AXIS_STEP)),
                spec.axis_min,
                spec.axis_max / _ASPECT_MIN,
            )
        )
        aspect = float(
            np.clip(
                aspect * math.exp(rng.uniform(-_ASPECT_STEP, _ASPECT_STEP)),
                _ASPECT_MIN,
                min(_ASPECT_MAX, spec.axis_max / h),
            )
        )
        theta += rng.uniform(-_THETA_STEP, _THETA_STEP)

    strong = np.stack(
        [
            _perturbed_mask(rec.params, size, spec.perturb, mode, phase)
            for rec, (mode, phase) in zip(records, wobble)
        ]
    )
    pseudo = stack_heatmaps(records, spec.depth, size)
    return records, strong, pseudo
