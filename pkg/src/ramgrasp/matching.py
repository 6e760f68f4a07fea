"""Positive/negative sample matching between ground truths and anchors.

An anchor (row, col, m) is positive for a ground truth when the GT
center falls in that grid cell and the GT angle matches bin m. Two angle
rules are supported:

* "one-sided" (default): bin = floor(theta / theta_margin). Every
  positive anchor can exactly represent its target, because decode spans
  [theta_anchor, theta_anchor + theta_margin].
* "symmetric": |theta - theta_anchor| < theta_margin, which can mark the
  neighboring bin positive as well. That neighbor cannot span the target
  angle, so its regression target is encoded with clamping.

When several GTs claim the same anchor, the GT whose center is nearest
the cell center wins; ties break to the lower GT index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Literal, Sequence

import numpy as np

from .anchors import AnchorGridConfig, OffsetVector, encode
from .errors import OutOfImage
from .geometry import GraspBox

MatchRule = Literal["one-sided", "symmetric"]


def cell_of(config: AnchorGridConfig, box: GraspBox) -> tuple[int, int]:
    """Grid (row, col) containing the box center.

    Centers exactly on the far image border clamp into the last cell;
    centers outside [0, W] x [0, H] raise OutOfImage.
    """
    if not (0.0 <= box.x <= config.image_w and 0.0 <= box.y <= config.image_h):
        raise OutOfImage(
            f"center ({box.x}, {box.y}) outside image "
            f"{config.image_w} x {config.image_h}"
        )
    row = min(int(math.floor(box.y / config.y_margin)), config.grid_rows - 1)
    col = min(int(math.floor(box.x / config.x_margin)), config.grid_cols - 1)
    return row, col


def angle_bin(config: AnchorGridConfig, theta: float) -> int:
    """Angular bin index for theta in [0, 180), clamped to k - 1."""
    return min(int(math.floor(theta / config.theta_margin)), config.anchors_per_cell - 1)


@dataclass(frozen=True)
class PositiveSample:
    anchor_row: int
    anchor_col: int
    angle_index: int
    gt_index: int
    target: OffsetVector


class Assignment:
    """Per-anchor labels produced by match().

    Dense representation over the N x M x k grid:

    * conf_labels: float array, 1.0 for positive anchors, 0.0 otherwise
    * targets: (N, M, k, 5) encoded regression targets, zero where negative
    * gt_indices: int array, index of the winning GT, -1 where negative
    """

    __slots__ = ("config", "conf_labels", "targets", "gt_indices")

    def __init__(self, config: AnchorGridConfig, conf_labels, targets, gt_indices):
        n, m, k, _ = config.shape
        self.config = config
        self.conf_labels = np.asarray(conf_labels, dtype=np.float64).reshape(n, m, k)
        self.targets = np.asarray(targets, dtype=np.float64).reshape(n, m, k, 5)
        self.gt_indices = np.asarray(gt_indices, dtype=np.int64).reshape(n, m, k)
        for arr in (self.conf_labels, self.targets):
            arr.setflags(write=False)
        self.gt_indices.setflags(write=False)

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.conf_labels))

    def positives(self) -> Iterator[PositiveSample]:
        for row, col, m in zip(*np.nonzero(self.conf_labels)):
            t = self.targets[row, col, m]
            yield PositiveSample(
                int(row), int(col), int(m),
                int(self.gt_indices[row, col, m]),
                OffsetVector(*t),
            )

    def is_positive(self, row: int, col: int, m: int) -> bool:
        return bool(self.conf_labels[row, col, m] == 1.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return (
            self.config == other.config
            and np.array_equal(self.conf_labels, other.conf_labels)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.gt_indices, other.gt_indices)
        )

    def to_json(self) -> str:
        """Debug dump (cells, bins, targets) for test fixtures."""
        doc = {
            "grid": list(self.config.shape[:3]),
            "positives": [
                {
                    "row": p.anchor_row,
                    "col": p.anchor_col,
                    "bin": p.angle_index,
                    "gt_index": p.gt_index,
                    "target": {
                        "t_x": p.target.t_x,
                        "t_y": p.target.t_y,
                        "t_w": p.target.t_w,
                        "t_h": p.target.t_h,
                        "t_theta": p.target.t_theta,
                    },
                }
                for p in self.positives()
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _candidate_bins(config: AnchorGridConfig, theta: float, rule: MatchRule) -> list[int]:
    if rule == "one-sided":
        return [angle_bin(config, theta)]
    if rule == "symmetric":
        # Literal |theta - theta_anchor| < theta_margin; at most the floor
        # bin and one neighbor can satisfy it.
        base = angle_bin(config, theta)
        bins = []
        for m in (base - 1, base, base + 1):
            if 0 <= m < config.anchors_per_cell:
                if abs(theta - m * config.theta_margin) < config.theta_margin:
                    bins.append(m)
        return bins
    raise ValueError(f"unknown match rule {rule!r}")


def match(
    config: AnchorGridConfig,
    ground_truths: Sequence[GraspBox],
    rule: MatchRule = "one-sided",
) -> Assignment:
    """Assign positive/negative labels and regression targets to anchors."""
    n, m, k, _ = config.shape
    conf = np.zeros((n, m, k))
    targets = np.zeros((n, m, k, 5))
    gt_idx = np.full((n, m, k), -1, dtype=np.int64)
    # Distance from the winning GT center to the cell center, per anchor;
    # inf where unclaimed. Lower-index GTs win ties because we only
    # replace on strict improvement.
    best_d2 = np.full((n, m, k), np.inf)

    for i, gt in enumerate(ground_truths):
        row, col = cell_of(config, gt)
        cx = (col + 0.5) * config.x_margin
        cy = (row + 0.5) * config.y_margin
        d2 = (gt.x - cx) ** 2 + (gt.y - cy) ** 2
        for bin_m in _candidate_bins(config, gt.theta, rule):
            if d2 >= best_d2[row, col, bin_m]:
                continue
            anchor = config.anchor(row, col, bin_m)
            offsets = encode(config, anchor, gt, clamp=(rule == "symmetric"))
            conf[row, col, bin_m] = 1.0
            targets[row, col, bin_m] = offsets.as_array()
            gt_idx[row, col, bin_m] = i
            best_d2[row, col, bin_m] = d2

    return Assignment(config, conf, targets, gt_idx)
