"""Command-line surface: validate, stats, encode, decode, eval, fit-demo.

Exit codes (stable contract): 0 success, 1 validation/evaluation
failure, 2 usage error, 3 I/O error.

Common options can also come from a config file of key=value lines
(keys match the long flag names without the leading dashes, e.g.
``grid=13,13``). Precedence: explicit flags > config file > built-in
defaults; ``--show-config`` prints the effective values.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .anchors import (
    AnchorGridConfig,
    OutputTensor,
    decode,
    deserialize_tensor,
    serialize_tensor,
    sigmoid,
    tensor_to_json,
)
from .annotations import parse_annotation
from .errors import RamGraspError, UnknownImageId
from .evaluation import EvalCriteria, EvalSample, Prediction, accuracy, threshold_sweep
from .losses import LossWeights
from .manifests import (
    anchor_dims,
    angle_histogram,
    boxes_per_image,
    load_annotations,
    load_manifest,
)
from .matching import match
from .predictions import format_prediction_line, read_predictions
from .reports import overlay_svg, report_csv, report_markdown, sweep_csv, sweep_markdown
from .scenes import render_scenes
from .training import evaluate_predictor, train

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULTS = {
    "grid": "13,13",
    "anchors": "3",
    "image-size": "416,416",
    "angle-thresh": "30",
    "iou-thresh": "0.25",
    "angle-wrap": "mod180",
    "match-rule": "one-sided",
    "seed": "42",
    "jobs": "1",
}


class UsageError(Exception):
    pass


def _parse_pair(text: str, name: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--{name} expects two comma-separated values, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"--{name} values must be numeric, got {text!r}") from None


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


class Settings:
    """Effective common options after flag/config/default resolution."""

    def __init__(self, args: argparse.Namespace):
        file_values = _read_config_file(args.config) if args.config else {}
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config file keys: {sorted(unknown)}")

        def resolve(key: str) -> str:
            flag = getattr(args, key.replace("-", "_"), None)
            if flag is not None:
                return str(flag)
            return file_values.get(key, DEFAULTS[key])

        self.effective = {key: resolve(key) for key in DEFAULTS}
        rows, cols = _parse_pair(self.effective["grid"], "grid")
        self.grid_rows, self.grid_cols = int(rows), int(cols)
        self.anchors_per_cell = int(self.effective["anchors"])
        self.image_h, self.image_w = _parse_pair(self.effective["image-size"], "image-size")
        self.angle_thresh = float(self.effective["angle-thresh"])
        self.iou_thresh = float(self.effective["iou-thresh"])
        self.angle_wrap = self.effective["angle-wrap"]
        self.match_rule = self.effective["match-rule"]
        self.seed = int(self.effective["seed"])
        self.jobs = max(1, int(self.effective["jobs"]))
        if self.angle_wrap not in ("mod180", "literal"):
            raise UsageError(f"--angle-wrap must be mod180 or literal")
        if self.match_rule not in ("one-sided", "symmetric"):
            raise UsageError(f"--match-rule must be one-sided or symmetric")

    def config_with_dims(self, anchor_dims_text: str | None) -> AnchorGridConfig:
        if not anchor_dims_text:
            raise UsageError("--anchor-dims W,H is required for this command")
        w, h = _parse_pair(anchor_dims_text, "anchor-dims")
        return AnchorGridConfig(
            image_h=self.image_h,
            image_w=self.image_w,
            grid_rows=self.grid_rows,
            grid_cols=self.grid_cols,
            anchors_per_cell=self.anchors_per_cell,
            anchor_w=w,
            anchor_h=h,
        )

    def criteria(self) -> EvalCriteria:
        return EvalCriteria(self.angle_thresh, self.iou_thresh, self.angle_wrap)

    def show(self, out) -> None:
        for key in sorted(self.effective):
            print(f"{key}={self.effective[key]}", file=out)


def _add_common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("common options")
    g.add_argument("--grid", help="grid size N,M (default 13,13)")
    g.add_argument("--anchors", help="anchors per cell k (default 3)")
    g.add_argument("--image-size", help="image size H,W (default 416,416)")
    g.add_argument("--angle-thresh", help="angle threshold in degrees (default 30)")
    g.add_argument("--iou-thresh", help="IoU threshold (default 0.25)")
    g.add_argument("--angle-wrap", choices=["mod180", "literal"])
    g.add_argument("--match-rule", choices=["one-sided", "symmetric"])
    g.add_argument("--seed", help="PRNG seed (default 42)")
    g.add_argument("--jobs", help="worker pool size for file-level work")
    g.add_argument("--config", help="key=value config file")
    g.add_argument(
        "--show-config", action="store_true", help="print effective options"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramgrasp",
        description="Rotation-anchor toolkit for oriented grasp-box detection.",
    )
    parser.add_argument("--version", action="version", version=f"ramgrasp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a directory of annotation XML files")
    p.add_argument("annotation_dir")
    p.add_argument("--xml-angle-convention", choices=["ccw", "cw"], default="ccw")
    _add_common(p)

    p = sub.add_parser("stats", help="dataset statistics from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=".")
    p.add_argument("--xml-angle-convention", choices=["ccw", "cw"], default="ccw")
    _add_common(p)

    p = sub.add_parser("encode", help="build ground-truth target tensors (RAMT)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=".")
    p.add_argument("--anchor-dims", help="anchor dimensions W,H in pixels")
    p.add_argument("--out", required=True, help="output directory for .ramt files")
    p.add_argument("--json", action="store_true", help="also write debug JSON")
    p.add_argument("--xml-angle-convention", choices=["ccw", "cw"], default="ccw")
    _add_common(p)

    p = sub.add_parser("decode", help="decode RAMT tensors into predictions JSONL")
    p.add_argument("tensors", nargs="+", help=".ramt files (image_id = file stem)")
    p.add_argument("--anchor-dims", help="anchor dimensions W,H in pixels")
    p.add_argument("--top", type=int, default=1, help="boxes per image (default 1)")
    p.add_argument("--out", required=True, help="output predictions.jsonl")
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate predictions against a manifest")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=".")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--sweep-angle", action="store_true")
    p.add_argument("--sweep-iou", action="store_true")
    p.add_argument("--overlay", help="directory for per-image SVG overlays")
    p.add_argument("--xml-angle-convention", choices=["ccw", "cw"], default="ccw")
    _add_common(p)

    p = sub.add_parser("fit-demo", help="train the toy predictor end to end")
    p.add_argument("--scenes", type=int, default=500)
    p.add_argument("--holdout", type=int, default=200)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--lambdas", default="2,0.024,10", help="loss weights l1,l2,l3")
    p.add_argument("--min-accuracy", type=float, default=0.9)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)

    return parser


def cmd_validate(args, settings: Settings, out) -> int:
    directory = Path(args.annotation_dir)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory} is not a directory")
    files = sorted(directory.glob("*.xml"))
    if not files:
        print("0 files to validate", file=out)
        return EXIT_OK

    def check(path: Path) -> tuple[Path, str | None]:
        try:
            parse_annotation(
                path.read_bytes(), xml_angle_convention=args.xml_angle_convention
            )
            return path, None
        except RamGraspError as exc:
            return path, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
        results = list(pool.map(check, files))

    failures = 0
    for path, problem in results:
        if problem is None:
            print(f"PASS {path.name}", file=out)
        else:
            failures += 1
            print(f"FAIL {path.name}: {problem}", file=out)
    print(f"{len(files)} files, {failures} failed", file=out)
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def cmd_stats(args, settings: Settings, out) -> int:
    manifest = load_manifest(args.manifest)
    images = load_annotations(
        manifest, args.root, xml_angle_convention=args.xml_angle_convention
    )
    w_anchor, h_anchor = anchor_dims(images)
    print(f"entries: {len(manifest)}", file=out)
    for tag, count in sorted(manifest.subset_counts().items()):
        print(f"subset {tag}: {count}", file=out)
    print(f"anchor_w: {w_anchor:.6f}", file=out)
    print(f"anchor_h: {h_anchor:.6f}", file=out)
    hist = angle_histogram(images)
    print("angle histogram (10 deg bins):", file=out)
    for i, count in enumerate(hist):
        print(f"  [{i * 10:3d},{(i + 1) * 10:3d}): {count}", file=out)
    print("boxes per image:", file=out)
    for k, count in boxes_per_image(images).items():
        print(f"  {k}: {count}", file=out)
    return EXIT_OK


def _target_tensor(config: AnchorGridConfig, boxes, rule: str) -> OutputTensor:
    assignment = match(config, boxes, rule=rule)
    values = np.zeros(config.shape)
    values[..., 0] = assignment.conf_labels
    values[..., 1:] = assignment.targets
    return OutputTensor(config, values)


def cmd_encode(args, settings: Settings, out) -> int:
    config = settings.config_with_dims(args.anchor_dims)
    manifest = load_manifest(args.manifest)
    images = load_annotations(
        manifest, args.root, xml_angle_convention=args.xml_angle_convention
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for img in images:
        tensor = _target_tensor(config, img.boxes, settings.match_rule)
        (out_dir / f"{img.image_id}.ramt").write_bytes(serialize_tensor(tensor))
        if args.json:
            (out_dir / f"{img.image_id}.json").write_text(tensor_to_json(tensor))
    print(f"encoded {len(images)} images into {out_dir}", file=out)
    return EXIT_OK


def cmd_decode(args, settings: Settings, out) -> int:
    config = settings.config_with_dims(args.anchor_dims)
    if args.top < 1:
        raise UsageError("--top must be >= 1")
    lines = []
    for tensor_path in args.tensors:
        data = Path(tensor_path).read_bytes()
        tensor = deserialize_tensor(data, config)
        image_id = Path(tensor_path).stem
        logits = tensor.values[..., 0]
        flat_order = np.argsort(logits, axis=None, kind="stable")[::-1]
        preds = []
        for flat_idx in flat_order[: args.top]:
            row, col, m = np.unravel_index(int(flat_idx), logits.shape)
            anchor = config.anchor(int(row), int(col), int(m))
            box = decode(config, anchor, tensor.offsets_at(anchor))
            conf = sigmoid(tensor.confidence_logit_at(anchor))
            preds.append(Prediction(image_id, box, conf))
        lines.append(format_prediction_line(image_id, preds))
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"decoded {len(args.tensors)} tensors into {args.out}", file=out)
    return EXIT_OK


def cmd_eval(args, settings: Settings, out) -> int:
    manifest = load_manifest(args.manifest)
    images = load_annotations(
        manifest, args.root, xml_angle_convention=args.xml_angle_convention
    )
    by_id = {img.image_id: img for img in images}
    preds = read_predictions(args.pred)
    for image_id in preds:
        if image_id not in by_id:
            raise UnknownImageId(image_id)
    samples = [
        EvalSample(
            image_id=img.image_id,
            predictions=tuple(preds.get(img.image_id, [])),
            ground_truths=img.boxes,
            subset=img.subset,
        )
        for img in images
    ]
    criteria = settings.criteria()
    report = accuracy(samples, criteria)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    md = [report_markdown(report)]
    (out_dir / "report.csv").write_text(report_csv(report))
    if args.sweep_angle or args.sweep_iou:
        angle_table, iou_table = threshold_sweep(samples, base=criteria)
        if args.sweep_angle:
            md.append(sweep_markdown(angle_table))
            (out_dir / "sweep_angle.csv").write_text(sweep_csv(angle_table))
        if args.sweep_iou:
            md.append(sweep_markdown(iou_table))
            (out_dir / "sweep_iou.csv").write_text(sweep_csv(iou_table))
    (out_dir / "report.md").write_text("\n".join(md))
    if args.overlay:
        overlay_dir = Path(args.overlay)
        overlay_dir.mkdir(parents=True, exist_ok=True)
        for sample in samples:
            verdict = report.per_image[sample.image_id]
            img = by_id[sample.image_id]
            svg = overlay_svg(
                sample, verdict.judged_box, verdict.correct, img.width, img.height
            )
            (overlay_dir / f"{sample.image_id}.svg").write_text(svg)
    print(f"accuracy: {report.accuracy:.4f} ({report.n_correct}/{report.n_images})", file=out)
    return EXIT_OK


def cmd_fit_demo(args, settings: Settings, out) -> int:
    parts = args.lambdas.split(",")
    if len(parts) != 3:
        raise UsageError(f"--lambdas expects three values, got {args.lambdas!r}")
    weights = LossWeights(float(parts[0]), float(parts[1]), float(parts[2]))
    if args.scenes < 100:
        raise UsageError("--scenes must be >= 100")

    # Anchor dims are fitted from the training ground truths (their mean
    # w and h), mirroring how a real dataset would configure the grid.
    base_config = AnchorGridConfig(
        image_h=settings.image_h,
        image_w=settings.image_w,
        grid_rows=settings.grid_rows,
        grid_cols=settings.grid_cols,
        anchors_per_cell=settings.anchors_per_cell,
        anchor_w=1.0,
        anchor_h=1.0,
    )
    train_seeds = range(settings.seed, settings.seed + args.scenes)
    holdout_seeds = range(
        settings.seed + 1_000_000, settings.seed + 1_000_000 + args.holdout
    )
    train_scenes = render_scenes(train_seeds, base_config)
    gt_w = float(np.mean([s.ground_truths[0].w for s in train_scenes]))
    gt_h = float(np.mean([s.ground_truths[0].h for s in train_scenes]))
    config = AnchorGridConfig(
        image_h=base_config.image_h,
        image_w=base_config.image_w,
        grid_rows=base_config.grid_rows,
        grid_cols=base_config.grid_cols,
        anchors_per_cell=base_config.anchors_per_cell,
        anchor_w=gt_w,
        anchor_h=gt_h,
    )
    holdout_scenes = render_scenes(holdout_seeds, config)

    result = train(
        train_scenes, config, weights=weights, steps=args.steps, learning_rate=args.lr
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    curve_lines = ["step,total_loss"]
    curve_lines += [f"{i},{v:.9g}" for i, v in enumerate(result.loss_curve)]
    (out_dir / "loss_curve.csv").write_text("\n".join(curve_lines) + "\n")
    result.predictor.save(out_dir / "predictor.ramp")

    report = evaluate_predictor(result.predictor, holdout_scenes, settings.criteria())
    (out_dir / "eval.md").write_text(report_markdown(report))
    (out_dir / "eval.csv").write_text(report_csv(report))

    print(f"initial loss: {result.initial_loss:.6f}", file=out)
    print(f"final loss:   {result.final_loss:.6f}", file=out)
    print(f"holdout accuracy: {report.accuracy:.4f}", file=out)
    if report.accuracy >= args.min_accuracy:
        return EXIT_OK
    print(
        f"accuracy gate not met (< {args.min_accuracy})",
        file=sys.stderr,
    )
    return EXIT_FAILURE


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "fit-demo": cmd_fit_demo,
}


def main(argv=None, out=sys.stdout) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        if args.show_config:
            settings.show(out)
        return COMMANDS[args.command](args, settings, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RamGraspError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
