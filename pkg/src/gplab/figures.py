"""Optional PNG rendering for reports and generated volumes.

Loaded only when a command is asked for a figure, and always through the
Agg backend so rendering works headless.
"""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

import numpy as np  # noqa: E402


def _save_atomic(fig, path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=110, bbox_inches="tight")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    finally:
        plt.close(fig)


def save_heatmap_montage(volume, path, cols: int = 4) -> None:
    """Tile the slices of a volume into one grayscale overview image."""
    v = np.asarray(volume)
    depth = v.shape[0]
    cols = max(1, min(cols, depth))
    rows = math.ceil(depth / cols)
    fig, axes = plt.subplots(
        rows, cols, figsize=(2.4 * cols, 2.4 * rows), squeeze=False
    )
    for k in range(rows * cols):
        ax = axes[k // cols][k % cols]
        ax.set_axis_off()
        if k < depth:
            ax.imshow(v[k], cmap="gray", vmin=0.0, vmax=1.0)
            ax.set_title(f"slice {k}", fontsize=8)
    _save_atomic(fig, path)


def save_report_chart(report: dict, path) -> None:
    """Bar chart of per-case metrics from an evaluation report dict.

    Accepts the JSON layout of the eval and variability commands: a
    "cases" list of per-case dicts plus an "aggregate" dict of
    <metric>_mean values.
    """
    cases = report["cases"]
    names = [str(c["id"]) for c in cases]
    metrics = [k for k in ("dsc", "sen", "hd", "vs", "dice") if k in cases[0]]
    cols = 2 if len(metrics) > 1 else 1
    rows = math.ceil(len(metrics) / cols)
    fig, axes = plt.subplots(
        rows, cols, figsize=(1.2 + 0.9 * max(4, len(names)) * cols, 3.0 * rows),
        squeeze=False,
    )
    for i, metric in enumerate(metrics):
        ax = axes[i // cols][i % cols]
        vals = [c[metric] for c in cases]
        ax.bar(range(len(vals)), vals, color="#4878a8")
        mean = report["aggregate"].get(f"{metric}_mean")
        if mean is not None:
            ax.axhline(mean, color="#b04a4a", lw=1.0, label=f"mean {mean:.2f}")
            ax.legend(fontsize=8)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
        ax.set_title(metric, fontsize=10)
    for i in range(len(metrics), rows * cols):
        axes[i // cols][i % cols].set_axis_off()
    fig.tight_layout()
    _save_atomic(fig, path)
