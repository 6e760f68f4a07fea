"""Render evaluation results as Markdown/CSV tables and SVG overlays.

Output is byte-stable: identical inputs produce identical bytes, so the
files diff-test cleanly (no timestamps, no environment-dependent text).
"""

from __future__ import annotations

import io
from typing import Sequence

from .evaluation import EvalReport, EvalSample, SweepTable
from .geometry import GraspBox, box_to_polygon


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def report_markdown(report: EvalReport) -> str:
    """Single-criteria accuracy table with per-subset breakdown."""
    subsets = sorted(report.subset_accuracy)
    lines = ["# Evaluation report", ""]
    lines.append(
        f"Criteria: angle <= {report.criteria.angle_threshold:g} deg "
        f"({report.criteria.angle_wrap}), IoU >= {report.criteria.iou_threshold:g}"
    )
    lines.append("")
    header = [f"{tag} (%)" for tag in subsets] + ["Mean micro (%)", "Mean macro (%)"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    row = [_pct(report.subset_accuracy[tag]) for tag in subsets]
    row += [_pct(report.accuracy), _pct(report.macro_accuracy)]
    lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append(f"Correct: {report.n_correct} / {report.n_images}")
    lines.append("")
    return "\n".join(lines)


def report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    buf.write("image_id,subset_placeholder,correct,matched_gt\n")
    for image_id in sorted(report.per_image):
        v = report.per_image[image_id]
        matched = "" if v.matched_gt is None else str(v.matched_gt)
        buf.write(f"{image_id},,{int(v.correct)},{matched}\n")
    return buf.getvalue()


def sweep_markdown(table: SweepTable) -> str:
    """Threshold-sweep table: one row per threshold, columns per subset."""
    subsets = table.subsets
    if table.varied == "angle":
        title = "Accuracy under tightening angle threshold"
        fixed = f"IoU threshold fixed at {table.fixed_value:g}"
        label = "Angle threshold"
        fmt = lambda t: f"{t:g} deg"
    else:
        title = "Accuracy under tightening IoU threshold"
        fixed = f"angle threshold fixed at {table.fixed_value:g} deg"
        label = "IoU threshold"
        fmt = lambda t: f"{t:.2f}"
    lines = [f"## {title}", "", fixed, ""]
    header = [label] + [f"{tag} (%)" for tag in subsets] + [
        "Mean micro (%)",
        "Mean macro (%)",
    ]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row in table.rows:
        cells = [fmt(row.threshold)]
        cells += [_pct(row.report.subset_accuracy[tag]) for tag in subsets]
        cells += [_pct(row.report.accuracy), _pct(row.report.macro_accuracy)]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)


def sweep_csv(table: SweepTable) -> str:
    subsets = table.subsets
    buf = io.StringIO()
    header = ["threshold"] + subsets + ["mean_micro", "mean_macro"]
    buf.write(",".join(header) + "\n")
    for row in table.rows:
        cells = [f"{row.threshold:g}"]
        cells += [f"{row.report.subset_accuracy[tag]:.6f}" for tag in subsets]
        cells += [f"{row.report.accuracy:.6f}", f"{row.report.macro_accuracy:.6f}"]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _polygon_points(box: GraspBox) -> str:
    pts = box_to_polygon(box).vertices
    return " ".join(f"{p[0]:.2f},{p[1]:.2f}" for p in pts)


def overlay_svg(
    sample: EvalSample,
    judged_box: GraspBox | None,
    correct: bool,
    image_w: float,
    image_h: float,
) -> str:
    """Per-image overlay: GT boxes dashed, the judged prediction solid."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{image_w:g}" '
        f'height="{image_h:g}" viewBox="0 0 {image_w:g} {image_h:g}">',
        f'<rect width="{image_w:g}" height="{image_h:g}" fill="#202020"/>',
    ]
    for gt in sample.ground_truths:
        parts.append(
            f'<polygon points="{_polygon_points(gt)}" fill="none" '
            f'stroke="#4caf50" stroke-width="2" stroke-dasharray="6,4"/>'
        )
    if judged_box is not None:
        color = "#2196f3" if correct else "#f44336"
        parts.append(
            f'<polygon points="{_polygon_points(judged_box)}" fill="none" '
            f'stroke="{color}" stroke-width="2.5"/>'
        )
    verdict = "correct" if correct else "incorrect"
    parts.append(
        f'<text x="8" y="20" fill="#ffffff" font-family="monospace" '
        f'font-size="14">{sample.image_id}: {verdict}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
