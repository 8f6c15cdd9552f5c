"""Command-line interface for the pseudo-label toolkit.

Commands cover the full desk workflow: fit ellipses to mask stacks, turn
ellipse tables into heatmap volumes (or do both at once), binarize
volumes, score segmentations, compute losses, check gradients, and
generate seeded phantoms. Slice- and case-level loops run in a thread
pool capped by GPL_THREADS; outputs are identical for any thread count.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats, metrics
from .ellipse_fit import fit_ellipse
from .errors import FileFormatError, GplabError, NumericError, UsageError
from .heatmap import stack_heatmaps, threshold
from .losses import LossWeights, combined_loss, gradient_check
from .core import EllipseRecord
from .parallel import ordered_map
from .phantom import PhantomSpec, generate_phantom

log = logging.getLogger(__name__)

GRADCHECK_TOL = 1e-4

_EPILOG = """\
exit codes:
  0  success
  2  usage error (bad arguments or GPL_THREADS)
  3  I/O or file-format error
  4  numeric or degenerate-input error

conventions:
  masks        directories of binary P5 .pgm slices, lexicographic order
  heatmaps     F32V containers (magic F32V, u32 depth/height/width, f32 LE)
  ellipses     CSV with header slice,cx,cy,semi_major,semi_minor,theta_rad
  GPL_THREADS  caps worker threads; never changes any output
"""


def _write_json(path, payload) -> None:
    data = (json.dumps(payload, indent=2) + "\n").encode("ascii")
    formats.atomic_write_bytes(path, data)


def _fit_records(mask_volume) -> list:
    """Fit every non-empty slice of a mask volume, in slice order."""
    filled = [k for k in range(mask_volume.shape[0]) if mask_volume[k].any()]
    fitted = ordered_map(lambda k: fit_ellipse(mask_volume[k]), filled)
    return [EllipseRecord(k, p) for k, p in zip(filled, fitted)]


def _discover_cases(dirpath) -> list:
    """Pair case ids with mask directories.

    A directory holding .pgm files directly is a single case named after
    the directory; otherwise each subdirectory containing .pgm files is
    one case, in name order.
    """
    root = Path(dirpath)
    if not root.is_dir():
        raise UsageError(f"{root}: not a directory")
    if any(p.suffix == ".pgm" for p in root.iterdir()):
        return [(root.name, root)]
    cases = [
        (sub.name, sub)
        for sub in sorted(root.iterdir())
        if sub.is_dir() and any(p.suffix == ".pgm" for p in sub.iterdir())
    ]
    if not cases:
        raise UsageError(f"{root}: no PGM case directories found")
    return cases


def _paired_cases(dir_a, dir_b) -> list:
    left = _discover_cases(dir_a)
    right = _discover_cases(dir_b)
    if len(left) == 1 and len(right) == 1:
        # two single-case roots pair up whatever they are called
        name, path = left[0]
        return [(name, path, right[0][1])]
    by_name = dict(right)
    if [name for name, _ in left] != sorted(by_name):
        raise UsageError(
            f"case sets differ: {[n for n, _ in left]} vs {sorted(by_name)}"
        )
    return [(name, path, by_name[name]) for name, path in left]


def cmd_fit(args) -> int:
    volume = formats.read_mask_stack(args.mask_dir)
    records = _fit_records(volume)
    formats.write_ellipse_csv(args.out_csv, records)
    print(f"fit {len(records)} of {volume.shape[0]} slices -> {args.out_csv}")
    return 0


def cmd_heatmap(args) -> int:
    records = formats.read_ellipse_csv(args.in_csv)
    volume = stack_heatmaps(records, args.depth, args.n)
    formats.write_f32v(args.out_f32v, volume)
    if args.fig:
        from .figures import save_heatmap_montage

        save_heatmap_montage(volume, args.fig)
    print(f"stacked {len(records)} ellipses -> {args.out_f32v}")
    return 0


def cmd_pseudo(args) -> int:
    masks = formats.read_mask_stack(args.mask_dir)
    depth, height, width = masks.shape
    if height != width:
        raise UsageError(
            f"pseudo labels need square slices, got {height}x{width}"
        )
    records = _fit_records(masks)
    volume = stack_heatmaps(records, depth, width)
    formats.write_f32v(args.out_f32v, volume)
    if args.fig:
        from .figures import save_heatmap_montage

        save_heatmap_montage(volume, args.fig)
    print(f"pseudo-labeled {len(records)} of {depth} slices -> {args.out_f32v}")
    return 0


def cmd_threshold(args) -> int:
    volume = formats.read_f32v(args.in_f32v)
    formats.write_mask_stack(args.out_dir, threshold(volume, args.t))
    print(f"threshold {args.t:g} -> {args.out_dir}")
    return 0


def cmd_eval(args) -> int:
    pairs = _paired_cases(args.pred_dir, args.gt_dir)
    spacing = tuple(args.spacing)

    def one(pair):
        name, pred_dir, gt_dir = pair
        return metrics.evaluate_case(
            name,
            formats.read_mask_stack(pred_dir),
            formats.read_mask_stack(gt_dir),
            spacing,
        )

    report = metrics.build_report(ordered_map(one, pairs))
    _write_json(args.out_json, report.as_dict())
    if args.fig:
        from .figures import save_report_chart

        save_report_chart(report.as_dict(), args.fig)
    agg = report.aggregate
    print(
        f"evaluated {len(pairs)} case(s): dsc={agg['dsc_mean']:.2f} "
        f"sen={agg['sen_mean']:.2f} hd={agg['hd_mean']:.2f} "
        f"vs={agg['vs_mean']:.2f} -> {args.out_json}"
    )
    return 0


def cmd_loss(args) -> int:
    pred = formats.read_f32v(args.pred_f32v)
    target = formats.read_f32v(args.target_f32v)
    weights = LossWeights(distribution=args.w1, reconstruction=args.w2)
    mode = "2d" if args.dist == "kl" else "3d"
    value, _ = combined_loss(target, pred, weights, mode)
    print(
        f"total={value.total:.9g} dist={value.distribution:.9g} "
        f"rec={value.reconstruction:.9g}"
    )
    return 0


def cmd_gradcheck(args) -> int:
    errors = gradient_check(args.seed)
    for name, err in errors.items():
        print(f"{name}: max relative error {err:.3e}")
    failed = {k: v for k, v in errors.items() if v > GRADCHECK_TOL}
    if failed:
        raise NumericError(
            f"gradient check failed above {GRADCHECK_TOL:g}: {failed}"
        )
    print("gradient check passed")
    return 0


def cmd_variability(args) -> int:
    pairs = _paired_cases(args.dir_a, args.dir_b)

    def one(pair):
        name, a_dir, b_dir = pair
        return metrics.dice(
            formats.read_mask_stack(a_dir), formats.read_mask_stack(b_dir)
        )

    scores = ordered_map(one, pairs)
    mean = float(np.mean(scores))
    spread = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
    payload = {
        "cases": [
            {"id": name, "dice": score}
            for (name, _, _), score in zip(pairs, scores)
        ],
        "aggregate": {"dice_mean": mean, "dice_std": spread},
    }
    _write_json(args.out_json, payload)
    if args.fig:
        from .figures import save_report_chart

        save_report_chart(payload, args.fig)
    print(f"dice {mean:.3f} +/- {spread:.3f} over {len(scores)} case(s)")
    return 0


def cmd_phantom(args) -> int:
    if not (args.out_csv or args.out_masks or args.out_f32v):
        raise UsageError("phantom needs --out-csv, --out-masks, or --out-f32v")
    spec = PhantomSpec(
        seed=args.seed,
        depth=args.depth,
        size=args.size,
        drift=args.drift,
        axis_min=args.axis_min,
        axis_max=args.axis_max,
        perturb=args.perturb,
        bulge_factor=args.bulge,
        bulge_start=args.bulge_start,
        bulge_end=args.bulge_end,
    )
    records, strong, pseudo = generate_phantom(spec)
    if args.out_csv:
        formats.write_ellipse_csv(args.out_csv, records)
    if args.out_masks:
        formats.write_mask_stack(args.out_masks, strong)
    if args.out_f32v:
        formats.write_f32v(args.out_f32v, pseudo)
    if args.fig:
        from .figures import save_heatmap_montage

        save_heatmap_montage(pseudo, args.fig)
    print(f"phantom seed={args.seed}: {spec.depth} slices of {spec.size}px")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gplab",
        description="Elliptical Gaussian pseudo-label toolkit.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit ellipses to a PGM mask stack")
    p.add_argument("--mask-dir", required=True, help="directory of .pgm slices")
    p.add_argument("--out-csv", required=True, help="ellipse table to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("heatmap", help="render an ellipse table to F32V")
    p.add_argument("--in-csv", required=True, help="ellipse table to read")
    p.add_argument("--depth", required=True, type=int, help="slices in the volume")
    p.add_argument("--n", required=True, type=int, help="square grid size")
    p.add_argument("--out-f32v", required=True, help="heatmap volume to write")
    p.add_argument("--fig", help="also write a slice-montage PNG")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("pseudo", help="fit + heatmap in one pass")
    p.add_argument("--mask-dir", required=True, help="directory of .pgm slices")
    p.add_argument("--out-f32v", required=True, help="heatmap volume to write")
    p.add_argument("--fig", help="also write a slice-montage PNG")
    p.set_defaults(func=cmd_pseudo)

    p = sub.add_parser("threshold", help="binarize an F32V volume to PGMs")
    p.add_argument("--in-f32v", required=True, help="heatmap volume to read")
    p.add_argument("--t", required=True, type=float, help="threshold in (0, 1)")
    p.add_argument("--out-dir", required=True, help="mask stack directory")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("eval", help="score predictions against references")
    p.add_argument("--pred-dir", required=True, help="prediction case root")
    p.add_argument("--gt-dir", required=True, help="reference case root")
    p.add_argument(
        "--spacing",
        nargs=3,
        type=float,
        default=(1.0, 1.0, 1.0),
        metavar=("SX", "SY", "SZ"),
        help="voxel spacing along x, y, z (default 1 1 1)",
    )
    p.add_argument("--out-json", required=True, help="report to write")
    p.add_argument("--fig", help="also write a per-case metric chart PNG")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loss", help="combined loss between two F32V volumes")
    p.add_argument("--pred-f32v", required=True, help="prediction volume")
    p.add_argument("--target-f32v", required=True, help="target volume")
    p.add_argument(
        "--dist",
        choices=("kl", "wass"),
        default="kl",
        help="distribution term: per-slice KL or axis-marginal transport",
    )
    p.add_argument("--w1", type=float, default=1.0, help="distribution weight")
    p.add_argument("--w2", type=float, default=1.0, help="reconstruction weight")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("gradcheck", help="compare analytic and numeric gradients")
    p.add_argument("--seed", type=int, default=0, help="case seed")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("variability", help="Dice agreement between two stacks")
    p.add_argument("--dir-a", required=True, help="first case root")
    p.add_argument("--dir-b", required=True, help="second case root")
    p.add_argument("--out-json", required=True, help="report to write")
    p.add_argument("--fig", help="also write a per-case Dice chart PNG")
    p.set_defaults(func=cmd_variability)

    p = sub.add_parser("phantom", help="generate a seeded synthetic phantom")
    p.add_argument("--seed", required=True, type=int, help="generator seed")
    p.add_argument("--depth", type=int, default=16, help="slices (default 16)")
    p.add_argument("--size", type=int, default=256, help="grid size (default 256)")
    p.add_argument(
        "--drift", type=float, default=1.5, help="center drift px/slice"
    )
    p.add_argument(
        "--axis-min", type=float, default=20.0, help="smallest semi-axis px"
    )
    p.add_argument(
        "--axis-max", type=float, default=45.0, help="largest semi-axis px"
    )
    p.add_argument(
        "--perturb",
        type=float,
        default=0.0,
        help="peak boundary perturbation of the strong mask, px",
    )
    p.add_argument(
        "--bulge", type=float, default=1.0, help="axis dilation factor (1 = off)"
    )
    p.add_argument("--bulge-start", type=int, default=0, help="first bulged slice")
    p.add_argument("--bulge-end", type=int, default=0, help="last bulged slice")
    p.add_argument("--out-csv", help="ellipse table to write")
    p.add_argument("--out-masks", help="strong-mask stack directory")
    p.add_argument("--out-f32v", help="pseudo heatmap volume to write")
    p.add_argument("--fig", help="also write a slice-montage PNG")
    p.set_defaults(func=cmd_phantom)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GplabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
