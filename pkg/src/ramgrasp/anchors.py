"""Rotation-anchor grid: configuration, offset decode, and its exact inverse.

The image is divided into an N x M grid; each cell holds k anchors that
split [0, 180) into k angular bins. A raw prediction volume is
N x M x k x 6 with channel order [confidence_logit, t_x, t_y, t_w, t_h,
t_theta]. Decoding maps offsets through sigmoid/exp so the predicted
center can never leave its cell and the predicted angle can never leave
its bin:

    x = (col + sigmoid(t_x)) * x_margin
    y = (row + sigmoid(t_y)) * y_margin
    w = anchor_w * exp(t_w)
    h = anchor_h * exp(t_h)
    theta = theta_anchor + sigmoid(t_theta) * theta_margin

Encoding is the exact logit/log inversion, with ratios clamped to
[1e-6, 1 - 1e-6] so targets on cell borders stay finite.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import AngleBinMismatch, CellMismatch, ConfigMismatch
from .geometry import GraspBox
from .validation import require_positive, require_positive_int

ENCODE_CLAMP_EPS = 1e-6
TENSOR_MAGIC = b"RAMT"
PREDICTOR_MAGIC = b"RAMP"
CHANNELS = 6  # [conf, t_x, t_y, t_w, t_h, t_theta]


@dataclass(frozen=True)
class AnchorGridConfig:
    """Grid geometry plus shared anchor dimensions.

    Margins are real-valued ratios; no divisibility is required between
    image size and grid size. theta_margin = 180 / anchors_per_cell is
    derived, never stored.
    """

    image_h: float
    image_w: float
    grid_rows: int
    grid_cols: int
    anchors_per_cell: int
    anchor_w: float
    anchor_h: float

    def __post_init__(self):
        require_positive("image_h", self.image_h)
        require_positive("image_w", self.image_w)
        require_positive_int("grid_rows", self.grid_rows)
        require_positive_int("grid_cols", self.grid_cols)
        require_positive_int("anchors_per_cell", self.anchors_per_cell)
        require_positive("anchor_w", self.anchor_w)
        require_positive("anchor_h", self.anchor_h)

    @property
    def x_margin(self) -> float:
        """Horizontal pixel extent of one grid column (W / M)."""
        return self.image_w / self.grid_cols

    @property
    def y_margin(self) -> float:
        """Vertical pixel extent of one grid row (H / N)."""
        return self.image_h / self.grid_rows

    @property
    def theta_margin(self) -> float:
        """Angular width in degrees of one anchor bin (180 / k)."""
        return 180.0 / self.anchors_per_cell

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.grid_rows, self.grid_cols, self.anchors_per_cell, CHANNELS)

    def anchor(self, row: int, col: int, angle_index: int) -> "Anchor":
        """Build the anchor at (row, col, angle_index), validating range."""
        if not (0 <= row < self.grid_rows):
            raise ValueError(f"row {row} outside [0, {self.grid_rows})")
        if not (0 <= col < self.grid_cols):
            raise ValueError(f"col {col} outside [0, {self.grid_cols})")
        if not (0 <= angle_index < self.anchors_per_cell):
            raise ValueError(
                f"angle_index {angle_index} outside [0, {self.anchors_per_cell})"
            )
        return Anchor(row, col, angle_index, angle_index * self.theta_margin)

    def iter_anchors(self):
        for row in range(self.grid_rows):
            for col in range(self.grid_cols):
                for m in range(self.anchors_per_cell):
                    yield self.anchor(row, col, m)


def margins(config: AnchorGridConfig) -> tuple[float, float]:
    """(x_margin, y_margin) of one grid cell in pixels."""
    return (config.x_margin, config.y_margin)


def theta_margin(config: AnchorGridConfig) -> float:
    return config.theta_margin


@dataclass(frozen=True)
class Anchor:
    """One rotation anchor: grid cell plus angular bin (0-based)."""

    row: int
    col: int
    angle_index: int
    theta_anchor: float


@dataclass(frozen=True)
class OffsetVector:
    """Dimensionless offsets regressed by a model relative to an anchor."""

    t_x: float
    t_y: float
    t_w: float
    t_h: float
    t_theta: float

    def __post_init__(self):
        for name in ("t_x", "t_y", "t_w", "t_h", "t_theta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.t_x, self.t_y, self.t_w, self.t_h, self.t_theta])


def sigmoid(x: float) -> float:
    """Numerically stable 1 / (1 + exp(-x))."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def logit(p: float) -> float:
    """Inverse sigmoid for p in (0, 1)."""
    return math.log(p / (1.0 - p))


def decode(config: AnchorGridConfig, anchor: Anchor, offsets: OffsetVector) -> GraspBox:
    """Apply offsets to an anchor, producing a grasp box.

    The center stays inside the anchor's cell and the angle inside
    [theta_anchor, theta_anchor + theta_margin] for any finite offsets.
    """
    _check_anchor(config, anchor)
    x = (anchor.col + sigmoid(offsets.t_x)) * config.x_margin
    y = (anchor.row + sigmoid(offsets.t_y)) * config.y_margin
    w = config.anchor_w * math.exp(offsets.t_w)
    h = config.anchor_h * math.exp(offsets.t_h)
    theta = anchor.theta_anchor + sigmoid(offsets.t_theta) * config.theta_margin
    return GraspBox(x, y, w, h, theta)  # GraspBox normalizes theta into [0, 180)


def encode(
    config: AnchorGridConfig,
    anchor: Anchor,
    target: GraspBox,
    clamp: bool = False,
) -> OffsetVector:
    """Exact inverse of decode for a target assigned to this anchor.

    Position/angle ratios are clamped to [1e-6, 1 - 1e-6] before the
    logit so borderline targets produce finite offsets. With clamp=False
    (default) a target outside the anchor's cell raises CellMismatch and
    an angle outside the anchor's bin raises AngleBinMismatch; with
    clamp=True out-of-range ratios clip to the nearest representable
    boundary instead (used by the symmetric matching rule, whose second
    anchor cannot span the target angle).
    """
    _check_anchor(config, anchor)
    rx = target.x / config.x_margin - anchor.col
    ry = target.y / config.y_margin - anchor.row
    rt = (target.theta - anchor.theta_anchor) / config.theta_margin
    if not clamp:
        # 1e-9 slack: far-edge centers clamped into the last cell can land
        # at ratio 1 + O(ulp) when margins are not exactly representable.
        tol = 1e-9
        if not (-tol <= rx <= 1.0 + tol and -tol <= ry <= 1.0 + tol):
            raise CellMismatch(
                f"target center ({target.x}, {target.y}) outside cell "
                f"(row {anchor.row}, col {anchor.col})"
            )
        if not (-tol <= rt <= 1.0 + tol):
            raise AngleBinMismatch(
                f"target angle {target.theta} outside bin {anchor.angle_index} "
                f"span [{anchor.theta_anchor}, "
                f"{anchor.theta_anchor + config.theta_margin})"
            )
    clip = lambda r: min(max(r, ENCODE_CLAMP_EPS), 1.0 - ENCODE_CLAMP_EPS)
    return OffsetVector(
        t_x=logit(clip(rx)),
        t_y=logit(clip(ry)),
        t_w=math.log(target.w / config.anchor_w),
        t_h=math.log(target.h / config.anchor_h),
        t_theta=logit(clip(rt)),
    )


def _check_anchor(config: AnchorGridConfig, anchor: Anchor) -> None:
    if not (
        0 <= anchor.row < config.grid_rows
        and 0 <= anchor.col < config.grid_cols
        and 0 <= anchor.angle_index < config.anchors_per_cell
    ):
        raise ValueError(f"anchor {anchor} outside grid {config.shape[:3]}")
    if abs(anchor.theta_anchor - anchor.angle_index * config.theta_margin) > 1e-9:
        raise ValueError(
            f"anchor theta {anchor.theta_anchor} inconsistent with "
            f"bin {anchor.angle_index} (theta_margin {config.theta_margin})"
        )


class OutputTensor:
    """Raw N x M x k x 6 prediction volume bound to its grid config.

    Values are copied and frozen on construction; all entries must be
    finite. Channel 0 is the confidence logit, channels 1..5 the offsets
    in (t_x, t_y, t_w, t_h, t_theta) order.
    """

    __slots__ = ("config", "values")

    def __init__(self, config: AnchorGridConfig, values) -> None:
        arr = np.array(values, dtype=np.float64)
        if arr.shape != config.shape:
            raise ConfigMismatch(
                f"tensor shape {arr.shape} does not match config {config.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor contains non-finite entries")
        arr.setflags(write=False)
        self.config = config
        self.values = arr

    def offsets_at(self, anchor: Anchor) -> OffsetVector:
        t = self.values[anchor.row, anchor.col, anchor.angle_index]
        return OffsetVector(t[1], t[2], t[3], t[4], t[5])

    def confidence_logit_at(self, anchor: Anchor) -> float:
        return float(self.values[anchor.row, anchor.col, anchor.angle_index, 0])


def serialize_tensor(tensor: OutputTensor) -> bytes:
    """Binary form: 20-byte header (magic 'RAMT', u32 N, M, k, channels)
    followed by float32 values in row-major [row][col][anchor][channel]
    order, little-endian."""
    n, m, k, c = tensor.config.shape
    header = TENSOR_MAGIC + struct.pack("<4I", n, m, k, c)
    return header + tensor.values.astype("<f4").tobytes(order="C")


def deserialize_tensor(data: bytes, config: AnchorGridConfig) -> OutputTensor:
    """Parse the binary form, validating the header against config."""
    values = _read_blob(data, TENSOR_MAGIC, config.shape)
    return OutputTensor(config, values)


def read_tensor_header(data: bytes) -> tuple[int, int, int, int]:
    """(N, M, k, channels) from a serialized tensor without decoding it."""
    if len(data) < 20 or data[:4] != TENSOR_MAGIC:
        raise ValueError("not a serialized output tensor (bad magic)")
    return struct.unpack("<4I", data[4:20])


def _read_blob(data: bytes, magic: bytes, shape: tuple[int, ...]) -> np.ndarray:
    if len(data) < 20 or data[:4] != magic:
        raise ValueError(f"bad magic: expected {magic!r}")
    dims = struct.unpack("<4I", data[4:20])
    expected = 1
    for d in shape:
        expected *= d
    if tuple(dims)[: len(shape)] != tuple(shape):
        raise ConfigMismatch(f"header dims {dims} do not match expected {shape}")
    flat = np.frombuffer(data, dtype="<f4", offset=20)
    if flat.size != expected:
        raise ValueError(f"payload holds {flat.size} floats, expected {expected}")
    return flat.astype(np.float64).reshape(shape)


def tensor_to_json(tensor: OutputTensor) -> str:
    """Human-readable debug form of a tensor."""
    n, m, k, c = tensor.config.shape
    doc = {
        "magic": TENSOR_MAGIC.decode(),
        "rows": n,
        "cols": m,
        "anchors_per_cell": k,
        "channels": c,
        "channel_order": ["conf", "t_x", "t_y", "t_w", "t_h", "t_theta"],
        "values": tensor.values.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)
