"""Ellipse recovery from binary masks and scattered boundary points.

The conic solve is the stabilized partitioned least-squares formulation:
the design matrix is split into quadratic and linear blocks, the linear
block is eliminated, and the ellipse branch is read off a 3x3 eigenproblem
whose ellipse solution is the eigenvector with positive 4ac - b^2.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import ndimage

from .core import ConicCoefficients, EllipseParams, canonicalize_ellipse
from .errors import (
    DegenerateInput,
    EmptyMask,
    ImaginaryEllipse,
    NoEllipseSolution,
    ShapeMismatch,
)

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 6

# cond(S3) above this means the point scatter has no stable linear block
_SCATTER_COND_LIMIT = 1e12

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def extract_boundary(mask) -> np.ndarray:
    """Centers (x, y) of foreground pixels that touch background.

    A pixel is boundary when any of its 4 neighbors is background; pixels
    on the image border count the outside as background. Points come back
    as an (N, 2) float array ordered by row, then column.
    """
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ShapeMismatch(f"mask must be 2-D, got shape {m.shape}")
    fg = m != 0
    if not fg.any():
        raise EmptyMask("mask has no foreground pixels")
    interior = np.zeros_like(fg)
    interior[1:-1, 1:-1] = (
        fg[1:-1, 1:-1]
        & fg[:-2, 1:-1]
        & fg[2:, 1:-1]
        & fg[1:-1, :-2]
        & fg[1:-1, 2:]
    )
    rows, cols = np.nonzero(fg & ~interior)
    return np.column_stack([cols, rows]).astype(float)


def fit_conic(points) -> ConicCoefficients:
    """Least-squares ellipse-specific conic through an (N, 2) point set.

    Points are mean-centered before the solve and the conic is translated
    back afterwards, so coordinates far from the origin stay stable.
    Needs at least 6 points in general position.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeMismatch(f"points must be (N, 2), got {pts.shape}")
    if pts.shape[0] < MIN_FIT_POINTS:
        raise DegenerateInput(
            f"need at least {MIN_FIT_POINTS} points, got {pts.shape[0]}"
        )
    if not np.isfinite(pts).all():
        raise DegenerateInput("non-finite point coordinates")

    mean_x = pts[:, 0].mean()
    mean_y = pts[:, 1].mean()
    x = pts[:, 0] - mean_x
    y = pts[:, 1] - mean_y

    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    if np.linalg.cond(s3) > _SCATTER_COND_LIMIT:
        raise DegenerateInput("point scatter is (near-)collinear")
    t = -np.linalg.solve(s3, s2.T)
    m = s1 + s2 @ t
    # premultiply by the inverse of the ellipse-constraint matrix
    m = np.vstack([m[2] / 2.0, -m[1], m[0] / 2.0])

    eigvals, eigvecs = np.linalg.eig(m)
    best = None
    best_cond = 0.0
    for k in range(3):
        if abs(eigvals[k].imag) > 1e-9 * max(1.0, abs(eigvals[k].real)):
            continue
        v = np.real(eigvecs[:, k])
        cond = 4.0 * v[0] * v[2] - v[1] * v[1]
        if cond > 0.0 and cond > best_cond:
            best, best_cond = v, cond
    if best is None:
        raise NoEllipseSolution("no eigenvector on the ellipse branch")

    coeffs = np.concatenate([best, t @ best])
    a, b, c, d, e, f = coeffs
    # undo the mean-centering: substitute x -> x - mean_x, y -> y - mean_y
    d_full = d - 2.0 * a * mean_x - b * mean_y
    e_full = e - b * mean_x - 2.0 * c * mean_y
    f_full = (
        f
        + a * mean_x * mean_x
        + b * mean_x * mean_y
        + c * mean_y * mean_y
        - d * mean_x
        - e * mean_y
    )
    return ConicCoefficients.from_vector([a, b, c, d_full, e_full, f_full])


def conic_to_params(conic) -> EllipseParams:
    """Geometric parameters of an ellipse conic, in canonical form.

    The center solves the gradient system 2a cx + b cy + d = 0,
    b cx + 2c cy + e = 0; the semi-axes come from the eigenvalues of the
    quadratic form, the major axis from its smaller eigenvalue; the tilt
    is the single expression atan2(-b, c - a) / 2, which is the major-axis
    angle under the a > 0 gauge.
    """
    if not isinstance(conic, ConicCoefficients):
        conic = ConicCoefficients.from_vector(conic)
    a, b, c, d, e, f = (
        conic.a, conic.b, conic.c, conic.d, conic.e, conic.f,
    )
    det = 4.0 * a * c - b * b  # positive: discriminant is negative
    cx = (b * e - 2.0 * c * d) / det
    cy = (b * d - 2.0 * a * e) / det
    f_center = f + (d * cx + e * cy) / 2.0

    spread = math.hypot(a - c, b)
    lam_small = (a + c - spread) / 2.0
    lam_large = (a + c + spread) / 2.0
    # with a > 0 and a negative discriminant both eigenvalues are positive,
    # so a real ellipse needs f_center < 0
    if f_center >= 0.0 or lam_small <= 0.0:
        raise ImaginaryEllipse(
            f"conic has no real points (f at center = {f_center:.6g})"
        )
    semi_major = math.sqrt(-f_center / lam_small)
    semi_minor = math.sqrt(-f_center / lam_large)
    theta = 0.5 * math.atan2(-b, c - a)
    return canonicalize_ellipse(cx, cy, semi_major, semi_minor, theta)


def _offset_outward(points, params: EllipseParams) -> np.ndarray:
    """Push boundary-pixel centers half a staircase layer outward.

    Inner boundary pixels sit between 0 and max(|nx|, |ny|) pixels inside
    the continuous outline (n is the local outward normal): that is how
    deep a center can be while a 1-pixel axis step still exits. Offsetting
    by half that depth along the normal removes the ~0.45 px inward bias
    of a fit through raw centers.
    """
    cx, cy = params.cx, params.cy
    w, h = params.semi_major, params.semi_minor
    cos_t, sin_t = math.cos(params.theta), math.sin(params.theta)
    mx = points[:, 0] - cx
    my = points[:, 1] - cy
    ux = mx * cos_t + my * sin_t
    uy = my * cos_t - mx * sin_t
    # gradient of the level-set function, rotated back to image axes
    gx = 2.0 * ux / (w * w)
    gy = 2.0 * uy / (h * h)
    nx = gx * cos_t - gy * sin_t
    ny = gx * sin_t + gy * cos_t
    norm = np.hypot(nx, ny)
    norm[norm == 0.0] = 1.0
    nx /= norm
    ny /= norm
    depth = np.maximum(np.abs(nx), np.abs(ny))
    return points + 0.5 * depth[:, None] * np.column_stack([nx, ny])


def fit_ellipse(mask) -> EllipseParams:
    """Fit one ellipse to the foreground of a binary mask.

    Runs extract_boundary -> fit_conic -> conic_to_params, then refits
    once on de-staircased points (see _offset_outward). Masks with more
    than one 8-connected foreground component are fitted whole, with a
    warning.
    """
    points = extract_boundary(mask)
    _, n_components = ndimage.label(np.asarray(mask) != 0, _EIGHT_CONNECTED)
    if n_components > 1:
        log.warning(
            "mask has %d foreground components; fitting them as one", n_components
        )
    first = conic_to_params(fit_conic(points))
    return conic_to_params(fit_conic(_offset_outward(points, first)))
