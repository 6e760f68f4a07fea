"""Exact geometry of oriented grasp rectangles.

Conventions used throughout the package:

* Image coordinates: x grows rightward, y grows downward (pixel frame).
* A grasp box is (x, y, w, h, theta): center, gripper-opening extent w,
  finger-width extent h, and theta = angle in degrees between the w edge
  and the +x axis, counterclockwise as seen on the displayed image (the
  y-down frame makes this (cos t, -sin t) in coordinates).
* Angles are canonical in [0, 180): a grasp rectangle is physically
  identical under a 180 degree rotation.
* Polygons store vertices so the shoelace signed area is non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import require_finite, require_positive

# Intersection vertices closer than this are merged.
VERTEX_MERGE_EPS = 1e-9
# Clipped regions below this area (px^2) collapse to the empty polygon.
SLIVER_AREA_EPS = 1e-12


@dataclass(frozen=True)
class GraspBox:
    """Five-dimensional oriented grasp rectangle.

    Construction normalizes any real angle into [0, 180) and rejects
    non-positive dimensions or non-finite coordinates.
    """

    x: float
    y: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", require_finite("x", self.x))
        object.__setattr__(self, "y", require_finite("y", self.y))
        object.__setattr__(self, "w", require_positive("w", self.w))
        object.__setattr__(self, "h", require_positive("h", self.h))
        theta = require_finite("theta", self.theta) % 180.0
        if theta == 180.0:  # guard against -1e-17 % 180 == 180.0 rounding
            theta = 0.0
        object.__setattr__(self, "theta", theta)

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.x, self.y, self.w, self.h, self.theta)


class ConvexPolygon:
    """Convex polygon with CCW-ordered vertices (non-negative shoelace area).

    The empty polygon (0 vertices) represents a null intersection.
    Construction deduplicates consecutive vertices at 1e-9 px, fixes the
    orientation, and rejects non-convex input.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices) -> None:
        arr = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
        arr = _dedupe_ring(arr)
        if len(arr) < 3:
            arr = arr[:0]
        elif _signed_area(arr) < 0:
            arr = arr[::-1].copy()
        if len(arr) and not _is_convex(arr):
            raise ValueError("vertices do not form a convex polygon")
        arr.setflags(write=False)
        self.vertices = arr

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"ConvexPolygon({self.vertices.tolist()!r})"

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0


def _dedupe_ring(arr: np.ndarray) -> np.ndarray:
    if len(arr) < 2:
        return arr
    keep = [arr[0]]
    for p in arr[1:]:
        if max(abs(p[0] - keep[-1][0]), abs(p[1] - keep[-1][1])) > VERTEX_MERGE_EPS:
            keep.append(p)
    while len(keep) > 1 and (
        max(abs(keep[-1][0] - keep[0][0]), abs(keep[-1][1] - keep[0][1]))
        <= VERTEX_MERGE_EPS
    ):
        keep.pop()
    return np.asarray(keep, dtype=np.float64)


def _signed_area(arr: np.ndarray) -> float:
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _is_convex(arr: np.ndarray) -> bool:
    # Tolerance scales with coordinate magnitude: cross products carry
    # squared-length units, so a fixed 1e-9 would misfire at pixel scale.
    a = np.roll(arr, -1, axis=0) - arr
    b = np.roll(a, -1, axis=0)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    scale = max(1.0, float(np.max(np.abs(arr))) ** 2)
    return bool(np.all(cross >= -1e-9 * scale))


def _axes(theta_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors along the w edge and the h edge in image coordinates."""
    t = math.radians(theta_deg)
    u = np.array([math.cos(t), -math.sin(t)])
    v = np.array([math.sin(t), math.cos(t)])
    return u, v


def box_to_polygon(box: GraspBox) -> ConvexPolygon:
    """Corners of the rotated rectangle, CCW, theta rotating the w edge."""
    u, v = _axes(box.theta)
    c = np.array([box.x, box.y])
    a = 0.5 * box.w * u
    b = 0.5 * box.h * v
    return ConvexPolygon([c + a + b, c - a + b, c - a - b, c + a - b])


def polygon_area(p: ConvexPolygon) -> float:
    """Shoelace area in px^2; 0 for the empty polygon."""
    if p.is_empty:
        return 0.0
    return abs(_signed_area(p.vertices))


def polygon_clip(subject: ConvexPolygon, clip: ConvexPolygon) -> ConvexPolygon:
    """Convex intersection via half-plane (Sutherland-Hodgman) clipping.

    Exact for convex inputs. Degenerate slivers below 1e-12 px^2 collapse
    to the empty polygon.
    """
    if subject.is_empty or clip.is_empty:
        return ConvexPolygon([])
    output = [tuple(p) for p in subject.vertices]
    cverts = clip.vertices
    for i in range(len(cverts)):
        if not output:
            return ConvexPolygon([])
        cp1 = cverts[i]
        cp2 = cverts[(i + 1) % len(cverts)]
        ex, ey = cp2[0] - cp1[0], cp2[1] - cp1[1]

        def side(p):
            # >= 0 means inside the half-plane left of edge cp1->cp2
            return ex * (p[1] - cp1[1]) - ey * (p[0] - cp1[0])

        current, output = output, []
        s = current[-1]
        s_side = side(s)
        for e in current:
            e_side = side(e)
            if e_side >= 0:
                if s_side < 0:
                    output.append(_edge_intersection(cp1, cp2, s, e))
                output.append(e)
            elif s_side >= 0:
                output.append(_edge_intersection(cp1, cp2, s, e))
            s, s_side = e, e_side
    result = ConvexPolygon(output)
    if polygon_area(result) < SLIVER_AREA_EPS:
        return ConvexPolygon([])
    return result


def _edge_intersection(cp1, cp2, s, e) -> tuple[float, float]:
    dcx, dcy = cp1[0] - cp2[0], cp1[1] - cp2[1]
    dpx, dpy = s[0] - e[0], s[1] - e[1]
    n1 = cp1[0] * cp2[1] - cp1[1] * cp2[0]
    n2 = s[0] * e[1] - s[1] * e[0]
    denom = dcx * dpy - dcy * dpx
    return ((n1 * dpx - n2 * dcx) / denom, (n1 * dpy - n2 * dcy) / denom)


def oriented_iou(a: GraspBox, b: GraspBox) -> float:
    """Exact intersection-over-union of two oriented rectangles."""
    pa, pb = box_to_polygon(a), box_to_polygon(b)
    area_a, area_b = polygon_area(pa), polygon_area(pb)
    inter = polygon_area(polygon_clip(pa, pb))
    # Clamp against fp noise so self-IoU is exactly 1 and IoU <= 1 always.
    inter = min(inter, area_a, area_b)
    union = area_a + area_b - inter
    return inter / union


def raster_iou(a: GraspBox, b: GraspBox, resolution: int = 1000) -> float:
    """Grid-rasterization IoU, the independent oracle for oriented_iou.

    Samples resolution x resolution cell centers over the joint bounding
    region and tests point-in-rotated-rectangle membership per cell.
    """
    if resolution < 100:
        raise ValueError("resolution must be >= 100 for a meaningful oracle")
    pa = box_to_polygon(a).vertices
    pb = box_to_polygon(b).vertices
    allv = np.vstack([pa, pb])
    xmin, ymin = allv.min(axis=0)
    xmax, ymax = allv.max(axis=0)
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    gx, gy = np.meshgrid(xs, ys)
    in_a = _membership(gx, gy, a)
    in_b = _membership(gx, gy, b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def _membership(gx: np.ndarray, gy: np.ndarray, box: GraspBox) -> np.ndarray:
    u, v = _axes(box.theta)
    dx = gx - box.x
    dy = gy - box.y
    along_w = dx * u[0] + dy * u[1]
    along_h = dx * v[0] + dy * v[1]
    return (np.abs(along_w) <= box.w / 2) & (np.abs(along_h) <= box.h / 2)


def angular_distance(t1: float, t2: float) -> float:
    """Distance in degrees on the mod-180 circle, in [0, 90].

    Respects the 180 degree symmetry of grasp rectangles: 170 vs 10
    differ by 20 degrees, not 160.
    """
    d = abs(t1 - t2) % 180.0
    return min(d, 180.0 - d)
