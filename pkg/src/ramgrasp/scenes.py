"""Synthetic single-object scenes for the desk-scale training demo.

A scene is a bright oriented rectangle rendered on a dark background,
reduced to per-cell features: a patch spanning WINDOW_CELLS x
WINDOW_CELLS cells centered on each grid cell is 4 x 4 mean-pooled,
giving F = 16 intensity statistics per cell. The patch is wider than
the cell itself because sampled boxes are larger than one cell; a
cell-sized patch at the box center saturates to all-ones and loses the
pose entirely. F = 16 over a 3-cell window is the smallest feature map
from which a linear readout recovers pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .anchors import AnchorGridConfig
from .geometry import GraspBox, _membership

POOL = 4
N_CELL_FEATURES = POOL * POOL
WINDOW_CELLS = 3  # receptive window per cell, in cells, zero-padded at borders

# Box dimension ranges for sampled ground truths (px). Elongated on
# purpose: the orientation of a near-square rectangle is invisible in
# pooled masks (and barely matters for grasping).
_W_RANGE = (70.0, 130.0)
_H_RANGE = (20.0, 35.0)
_SAFE_PAD = 2.0


@dataclass(frozen=True)
class SyntheticScene:
    """Per-cell feature grid plus the single ground-truth box."""

    features: np.ndarray  # (N, M, 16), read-only
    ground_truths: tuple[GraspBox, ...]
    rng_seed: int

    @property
    def image_id(self) -> str:
        return f"scene-{self.rng_seed:06d}"


def _cell_pixels(config: AnchorGridConfig) -> tuple[int, int]:
    ch = config.image_h / config.grid_rows
    cw = config.image_w / config.grid_cols
    if (
        ch != int(ch)
        or cw != int(cw)
        or (int(ch) * WINDOW_CELLS) % POOL
        or (int(cw) * WINDOW_CELLS) % POOL
    ):
        raise ValueError(
            "scene rendering needs integer cell sizes whose "
            f"{WINDOW_CELLS}-cell window divides by {POOL}; got {ch} x {cw}"
        )
    return int(ch), int(cw)


def render_mask(box: GraspBox, width: int, height: int) -> np.ndarray:
    """Binary occupancy of the box over pixel centers (x + 0.5, y + 0.5)."""
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    return _membership(gx, gy, box).astype(np.float64)


def features_from_mask(mask: np.ndarray, config: AnchorGridConfig) -> np.ndarray:
    """Mean-pool each cell's receptive window down to a POOL x POOL patch."""
    ch, cw = _cell_pixels(config)
    n, m = config.grid_rows, config.grid_cols
    wh, ww = WINDOW_CELLS * ch, WINDOW_CELLS * cw
    pad_h, pad_w = (WINDOW_CELLS // 2) * ch, (WINDOW_CELLS // 2) * cw
    padded = np.zeros((mask.shape[0] + 2 * pad_h, mask.shape[1] + 2 * pad_w))
    padded[pad_h : pad_h + mask.shape[0], pad_w : pad_w + mask.shape[1]] = mask
    windows = sliding_window_view(padded, (wh, ww))[::ch, ::cw]  # (N, M, wh, ww)
    pooled = windows.reshape(n, m, POOL, wh // POOL, POOL, ww // POOL).mean(axis=(3, 5))
    return pooled.reshape(n, m, N_CELL_FEATURES)


def sample_box(rng: np.random.Generator, config: AnchorGridConfig) -> GraspBox:
    """Uniform pose over safe interior positions, theta uniform in [0, 180)."""
    w = rng.uniform(*_W_RANGE)
    h = rng.uniform(*_H_RANGE)
    theta = rng.uniform(0.0, 180.0)
    pad = 0.5 * math.hypot(w, h) + _SAFE_PAD
    x = rng.uniform(pad, config.image_w - pad)
    y = rng.uniform(pad, config.image_h - pad)
    return GraspBox(x, y, w, h, theta)


def render_scene(seed: int, config: AnchorGridConfig) -> SyntheticScene:
    """Deterministic per seed; exactly one ground truth, fully inside."""
    rng = np.random.default_rng(seed)
    box = sample_box(rng, config)
    mask = render_mask(box, int(config.image_w), int(config.image_h))
    features = features_from_mask(mask, config)
    features.setflags(write=False)
    return SyntheticScene(features, (box,), seed)


def render_scenes(seeds, config: AnchorGridConfig) -> list[SyntheticScene]:
    return [render_scene(int(s), config) for s in seeds]
