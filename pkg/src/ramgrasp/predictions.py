"""Prediction files: JSONL, one record per image.

    {"image_id": "img0001",
     "boxes": [{"x": 100.0, "y": 200.0, "w": 80.0, "h": 30.0,
                "theta_deg": 45.0, "confidence": 0.93}]}

theta_deg must be in [0, 180), confidence in [0, 1], image_id nonempty.
Line numbers are 1-based in error messages.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable

from .errors import MalformedJsonl
from .evaluation import Prediction
from .geometry import GraspBox

_BOX_KEYS = ("x", "y", "w", "h", "theta_deg", "confidence")


def parse_prediction_lines(lines: Iterable[str]) -> dict[str, list[Prediction]]:
    """Parse JSONL text into {image_id: [Prediction, ...]}, keeping order."""
    out: dict[str, list[Prediction]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedJsonl(lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(rec, dict):
            raise MalformedJsonl(lineno, "record must be a JSON object")
        image_id = rec.get("image_id")
        if not isinstance(image_id, str) or not image_id:
            raise MalformedJsonl(lineno, "image_id must be a nonempty string")
        if image_id in out:
            raise MalformedJsonl(lineno, f"duplicate image_id {image_id!r}")
        boxes = rec.get("boxes")
        if not isinstance(boxes, list):
            raise MalformedJsonl(lineno, "boxes must be a list")
        preds = []
        for i, b in enumerate(boxes):
            preds.append(_parse_box(b, lineno, i, image_id))
        out[image_id] = preds
    return out


def _parse_box(b, lineno: int, index: int, image_id: str) -> Prediction:
    if not isinstance(b, dict):
        raise MalformedJsonl(lineno, f"boxes[{index}] must be an object")
    vals = {}
    for key in _BOX_KEYS:
        if key not in b:
            raise MalformedJsonl(lineno, f"boxes[{index}] missing {key!r}")
        try:
            vals[key] = float(b[key])
        except (TypeError, ValueError):
            raise MalformedJsonl(
                lineno, f"boxes[{index}].{key} is not a number"
            ) from None
        if not math.isfinite(vals[key]):
            raise MalformedJsonl(lineno, f"boxes[{index}].{key} is not finite")
    if not (0.0 <= vals["theta_deg"] < 180.0):
        raise MalformedJsonl(
            lineno, f"boxes[{index}].theta_deg {vals['theta_deg']} outside [0, 180)"
        )
    if not (0.0 <= vals["confidence"] <= 1.0):
        raise MalformedJsonl(
            lineno, f"boxes[{index}].confidence {vals['confidence']} outside [0, 1]"
        )
    if vals["w"] <= 0 or vals["h"] <= 0:
        raise MalformedJsonl(lineno, f"boxes[{index}] has non-positive dimensions")
    box = GraspBox(vals["x"], vals["y"], vals["w"], vals["h"], vals["theta_deg"])
    return Prediction(image_id, box, vals["confidence"])


def read_predictions(path: str | Path) -> dict[str, list[Prediction]]:
    with open(path, "r") as fh:
        return parse_prediction_lines(fh)


def format_prediction_line(image_id: str, predictions: Iterable[Prediction]) -> str:
    rec = {
        "image_id": image_id,
        "boxes": [
            {
                "x": p.box.x,
                "y": p.box.y,
                "w": p.box.w,
                "h": p.box.h,
                "theta_deg": p.box.theta,
                "confidence": p.confidence,
            }
            for p in predictions
        ],
    }
    return json.dumps(rec, sort_keys=True)


def write_predictions(
    path: str | Path, by_image: dict[str, list[Prediction]]
) -> None:
    lines = [format_prediction_line(iid, preds) for iid, preds in by_image.items()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
