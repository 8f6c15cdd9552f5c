"""Elliptical Gaussian pseudo-label toolkit.

Turns ellipse annotations or binary masks into Gaussian heatmap volumes
whose 0.5 level set is the annotated outline, computes distribution and
reconstruction losses with analytic gradients, and scores segmentations
with overlap, boundary-distance, and volume metrics.
"""

from .core import (
    ConicCoefficients,
    EllipseParams,
    EllipseRecord,
    canonicalize_ellipse,
    validate_volume,
)
from .ellipse_fit import conic_to_params, extract_boundary, fit_conic, fit_ellipse
from .heatmap import (
    elementwise_product,
    evaluate_heatmap,
    generate_heatmap,
    heatmap_grids,
    stack_heatmaps,
    threshold,
)
from .losses import (
    LossValue,
    LossWeights,
    combined_loss,
    finite_difference_gradient,
    gradient_check,
    kl_loss,
    mae_loss,
    recover_by_descent,
    softmax_map,
    wasserstein_loss,
)
from .metrics import (
    CaseMetrics,
    EvalReport,
    boundary_voxels,
    build_report,
    confusion_counts,
    dice,
    evaluate_case,
    hausdorff,
    sensitivity,
    variability,
    volumetric_similarity,
)
from .phantom import PhantomSpec, generate_phantom

__version__ = "0.1.0"

__all__ = [
    "CaseMetrics",
    "ConicCoefficients",
    "EllipseParams",
    "EllipseRecord",
    "EvalReport",
    "LossValue",
    "LossWeights",
    "PhantomSpec",
    "boundary_voxels",
    "build_report",
    "canonicalize_ellipse",
    "combined_loss",
    "confusion_counts",
    "conic_to_params",
    "dice",
    "elementwise_product",
    "evaluate_case",
    "evaluate_heatmap",
    "extract_boundary",
    "finite_difference_gradient",
    "fit_conic",
    "fit_ellipse",
    "generate_heatmap",
    "generate_phantom",
    "gradient_check",
    "hausdorff",
    "heatmap_grids",
    "kl_loss",
    "mae_loss",
    "recover_by_descent",
    "sensitivity",
    "softmax_map",
    "stack_heatmaps",
    "threshold",
    "validate_volume",
    "variability",
    "volumetric_similarity",
    "wasserstein_loss",
]
