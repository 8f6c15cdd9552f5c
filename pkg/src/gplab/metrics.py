"""Overlap, boundary-distance, and volume agreement metrics.

Percent-valued metrics (Dice, sensitivity, volume similarity) follow the
convention score = 100 * ratio. The boundary-distance metric is the
classic maximum symmetric Hausdorff distance between boundary voxel sets,
Euclidean with per-axis spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    BothEmpty,
    EmptyGroundTruth,
    EmptyVolume,
    LengthMismatch,
    ShapeMismatch,
)


def _binary_pair(pred, gt):
    p = np.asarray(pred) != 0
    g = np.asarray(gt) != 0
    if p.shape != g.shape:
        raise ShapeMismatch(f"prediction {p.shape} and reference {g.shape} differ")
    return p, g


def confusion_counts(pred, gt):
    """(tp, fp, fn, tn) over all voxels; any nonzero value is foreground."""
    p, g = _binary_pair(pred, gt)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = p.size - tp - fp - fn
    return tp, fp, fn, tn


def dice(pred, gt) -> float:
    """Dice overlap in percent: 100 * 2tp / (2tp + fp + fn).

    Two empty inputs agree perfectly and score 100.
    """
    tp, fp, fn, _ = confusion_counts(pred, gt)
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 100.0
    return 100.0 * 2.0 * tp / denom


def sensitivity(pred, gt) -> float:
    """Recall in percent: 100 * tp / (tp + fn)."""
    tp, _, fn, _ = confusion_counts(pred, gt)
    if tp + fn == 0:
        raise EmptyGroundTruth("sensitivity undefined for an empty reference")
    return 100.0 * tp / (tp + fn)


def volumetric_similarity(pred, gt) -> float:
    """100 * (1 - |#pred - #gt| / (#pred + #gt))."""
    tp, fp, fn, _ = confusion_counts(pred, gt)
    n_pred = tp + fp
    n_gt = tp + fn
    if n_pred + n_gt == 0:
        raise BothEmpty("volume similarity undefined when both are empty")
    return 100.0 * (1.0 - abs(n_pred - n_gt) / (n_pred + n_gt))


def boundary_voxels(volume) -> np.ndarray:
    """(N, 3) indices (z, y, x) of foreground voxels touching background.

    A voxel is boundary when any of its 6 axis neighbors is background;
    outside the volume counts as background.
    """
    v = np.asarray(volume) != 0
    if v.ndim != 3:
        raise ShapeMismatch(f"volume must be 3-D, got shape {v.shape}")
    interior = np.zeros_like(v)
    interior[1:-1, 1:-1, 1:-1] = (
        v[1:-1, 1:-1, 1:-1]
        & v[:-2, 1:-1, 1:-1]
        & v[2:, 1:-1, 1:-1]
        & v[1:-1, :-2, 1:-1]
        & v[1:-1, 2:, 1:-1]
        & v[1:-1, 1:-1, :-2]
        & v[1:-1, 1:-1, 2:]
    )
    return np.argwhere(v & ~interior)


def hausdorff(pred, gt, spacing=(1.0, 1.0, 1.0)) -> float:
    """Maximum symmetric Hausdorff distance between boundary voxel sets.

    spacing is (sx, sy, sz): physical step along columns, rows, and
    slices. Distances are Euclidean in physical units.
    """
    p, g = _binary_pair(pred, gt)
    if not p.any() or not g.any():
        raise EmptyVolume("boundary distance needs foreground on both sides")
    sx, sy, sz = (float(s) for s in spacing)
    if min(sx, sy, sz) <= 0.0:
        raise ShapeMismatch(f"spacing must be positive, got {spacing!r}")
    scale = np.array([sz, sy, sx])  # boundary indices are (z, y, x)
    bp = boundary_voxels(p) * scale
    bg = boundary_voxels(g) * scale
    d_pg, _ = cKDTree(bg).query(bp)
    d_gp, _ = cKDTree(bp).query(bg)
    return float(max(d_pg.max(), d_gp.max()))


def variability(pred_list, gt_list):
    """Per-case Dice mean and sample standard deviation.

    The deviation uses the n-1 normalization and is 0.0 for a single case.
    """
    preds = list(pred_list)
    gts = list(gt_list)
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gts)} references")
    if not preds:
        raise LengthMismatch("no cases")
    scores = np.array([dice(p, g) for p, g in zip(preds, gts)])
    spread = float(scores.std(ddof=1)) if scores.size > 1 else 0.0
    return float(scores.mean()), spread


@dataclass(frozen=True)
class CaseMetrics:
    """All four metrics for one prediction/reference pair."""

    case_id: str
    dsc: float
    sen: float
    hd: float
    vs: float

    def as_dict(self) -> dict:
        return {
            "id": self.case_id,
            "dsc": self.dsc,
            "sen": self.sen,
            "hd": self.hd,
            "vs": self.vs,
        }


@dataclass(frozen=True)
class EvalReport:
    """Per-case metrics plus mean/deviation aggregates."""

    per_case: tuple
    aggregate: dict

    def as_dict(self) -> dict:
        return {
            "cases": [c.as_dict() for c in self.per_case],
            "aggregate": dict(self.aggregate),
        }


def evaluate_case(case_id, pred, gt, spacing=(1.0, 1.0, 1.0)) -> CaseMetrics:
    """Compute DSC, SEN, HD, and VS for one pair of volumes."""
    return CaseMetrics(
        case_id=str(case_id),
        dsc=dice(pred, gt),
        sen=sensitivity(pred, gt),
        hd=hausdorff(pred, gt, spacing),
        vs=volumetric_similarity(pred, gt),
    )


def build_report(case_metrics) -> EvalReport:
    """Aggregate per-case metrics into a report.

    Aggregates are the mean and sample deviation (n-1; 0.0 for a single
    case) of each metric, keyed <metric>_mean / <metric>_std.
    """
    cases = tuple(case_metrics)
    if not cases:
        raise LengthMismatch("no cases to aggregate")
    aggregate = {}
    for name in ("dsc", "sen", "hd", "vs"):
        vals = np.array([getattr(c, name) for c in cases])
        aggregate[f"{name}_mean"] = float(vals.mean())
        aggregate[f"{name}_std"] = (
            float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        )
    return EvalReport(per_case=cases, aggregate=aggregate)
