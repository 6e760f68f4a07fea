"""Rectangle-metric evaluation: per-image judging, accuracy, threshold sweeps.

A prediction is correct against a ground truth when the angular
deviation is at most the angle threshold (default 30 degrees) AND the
oriented IoU is at least the IoU threshold (default 0.25); both
inequalities are non-strict. Per image, only the highest-confidence
prediction is judged, and it is correct if it matches at least one
ground truth. Images with no predictions count as incorrect.

The angle deviation wraps on the mod-180 circle by default (a grasp
rectangle is physically identical under 180 degree rotation); the
literal absolute-difference reading is available via angle_wrap.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

from .errors import EmptyDataset
from .geometry import GraspBox, angular_distance, oriented_iou

AngleWrap = Literal["mod180", "literal"]


@dataclass(frozen=True)
class Prediction:
    image_id: str
    box: GraspBox
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence!r} outside [0, 1]")


@dataclass(frozen=True)
class EvalCriteria:
    angle_threshold: float = 30.0
    iou_threshold: float = 0.25
    angle_wrap: AngleWrap = "mod180"

    def __post_init__(self):
        if not self.angle_threshold > 0:
            raise ValueError("angle_threshold must be > 0")
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValueError("iou_threshold must be in (0, 1]")
        if self.angle_wrap not in ("mod180", "literal"):
            raise ValueError(f"unknown angle_wrap {self.angle_wrap!r}")


@dataclass(frozen=True)
class EvalSample:
    """One image's predictions and ground truths for aggregation."""

    image_id: str
    predictions: tuple[Prediction, ...]
    ground_truths: tuple[GraspBox, ...]
    subset: str = "other"


@dataclass(frozen=True)
class ImageVerdict:
    image_id: str
    judged_box: GraspBox | None
    matched_gt: int | None
    correct: bool
    no_predictions: bool = False


@dataclass(frozen=True)
class EvalReport:
    criteria: EvalCriteria
    per_image: dict[str, ImageVerdict]
    accuracy: float
    subset_accuracy: dict[str, float] = field(default_factory=dict)
    # micro = over all images; macro = unweighted mean of subset accuracies.
    # They coincide when subsets are equally sized.
    macro_accuracy: float = 0.0

    @property
    def n_images(self) -> int:
        return len(self.per_image)

    @property
    def n_correct(self) -> int:
        return sum(1 for v in self.per_image.values() if v.correct)


def _angle_deviation(pred: GraspBox, gt: GraspBox, wrap: AngleWrap) -> float:
    if wrap == "mod180":
        return angular_distance(pred.theta, gt.theta)
    return abs(pred.theta - gt.theta)


def is_correct(pred: GraspBox, gt: GraspBox, criteria: EvalCriteria = EvalCriteria()) -> bool:
    """Both conditions, inclusively: deviation <= angle and IoU >= iou."""
    if _angle_deviation(pred, gt, criteria.angle_wrap) > criteria.angle_threshold:
        return False
    return oriented_iou(pred, gt) >= criteria.iou_threshold


def top_prediction(predictions: Sequence[Prediction]) -> Prediction | None:
    """Highest confidence; ties break to the earliest in input order."""
    best = None
    for p in predictions:
        if best is None or p.confidence > best.confidence:
            best = p
    return best


def judge_image(
    predictions: Sequence[Prediction],
    ground_truths: Sequence[GraspBox],
    criteria: EvalCriteria = EvalCriteria(),
    image_id: str = "",
) -> ImageVerdict:
    """Judge the top-confidence prediction against all ground truths."""
    if not ground_truths:
        raise ValueError("judge_image requires at least one ground truth")
    best = top_prediction(predictions)
    if best is None:
        return ImageVerdict(image_id, None, None, False, no_predictions=True)
    for i, gt in enumerate(ground_truths):
        if is_correct(best.box, gt, criteria):
            return ImageVerdict(image_id, best.box, i, True)
    return ImageVerdict(image_id, best.box, None, False)


class _PreparedImage:
    """Cached angle deviations and IoUs of the judged prediction vs GTs.

    The judged prediction depends only on confidences, never on the
    thresholds, so a threshold sweep reuses these numbers instead of
    re-running the polygon clipping per criteria setting.
    """

    __slots__ = ("image_id", "subset", "judged_box", "pairs", "no_predictions")

    def __init__(self, sample: EvalSample):
        if not sample.ground_truths:
            raise ValueError(f"image {sample.image_id!r} has no ground truths")
        self.image_id = sample.image_id
        self.subset = sample.subset
        best = top_prediction(sample.predictions)
        self.no_predictions = best is None
        self.judged_box = None if best is None else best.box
        if best is None:
            self.pairs = []
        else:
            self.pairs = [
                (
                    angular_distance(best.box.theta, gt.theta),
                    abs(best.box.theta - gt.theta),
                    oriented_iou(best.box, gt),
                )
                for gt in sample.ground_truths
            ]

    def verdict(self, criteria: EvalCriteria) -> ImageVerdict:
        if self.no_predictions:
            return ImageVerdict(self.image_id, None, None, False, no_predictions=True)
        for i, (dev_mod, dev_lit, iou) in enumerate(self.pairs):
            dev = dev_mod if criteria.angle_wrap == "mod180" else dev_lit
            if dev <= criteria.angle_threshold and iou >= criteria.iou_threshold:
                return ImageVerdict(self.image_id, self.judged_box, i, True)
        return ImageVerdict(self.image_id, self.judged_box, None, False)


def _prepare(dataset: Sequence[EvalSample]) -> list[_PreparedImage]:
    if not dataset:
        raise EmptyDataset("evaluation dataset is empty")
    seen = set()
    for s in dataset:
        if s.image_id in seen:
            raise ValueError(f"duplicate image_id {s.image_id!r} in dataset")
        seen.add(s.image_id)
    return [_PreparedImage(s) for s in dataset]


def _report(prepared: Sequence[_PreparedImage], criteria: EvalCriteria) -> EvalReport:
    per_image = {p.image_id: p.verdict(criteria) for p in prepared}
    total = len(per_image)
    correct = sum(1 for v in per_image.values() if v.correct)
    by_subset: dict[str, list[bool]] = {}
    for p in prepared:
        by_subset.setdefault(p.subset, []).append(per_image[p.image_id].correct)
    subset_acc = {
        tag: sum(flags) / len(flags) for tag, flags in sorted(by_subset.items())
    }
    macro = sum(subset_acc.values()) / len(subset_acc)
    return EvalReport(criteria, per_image, correct / total, subset_acc, macro)


def accuracy(
    dataset: Sequence[EvalSample], criteria: EvalCriteria = EvalCriteria()
) -> EvalReport:
    """Fraction of images whose judged prediction matches a ground truth."""
    return _report(_prepare(dataset), criteria)


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    report: EvalReport


@dataclass(frozen=True)
class SweepTable:
    varied: Literal["angle", "iou"]
    fixed_value: float
    rows: tuple[SweepRow, ...]

    @property
    def subsets(self) -> list[str]:
        return sorted(self.rows[0].report.subset_accuracy) if self.rows else []


def threshold_sweep(
    dataset: Sequence[EvalSample],
    angle_thresholds: Sequence[float] = (30.0, 25.0, 20.0, 15.0, 10.0),
    iou_thresholds: Sequence[float] = (0.25, 0.30, 0.35, 0.40, 0.45),
    base: EvalCriteria = EvalCriteria(),
) -> tuple[SweepTable, SweepTable]:
    """Accuracy under tightening angle and IoU thresholds.

    Returns (angle_sweep, iou_sweep): the angle sweep holds the IoU
    threshold at base.iou_threshold, and vice versa. Threshold lists
    must be ordered strictly most-permissive first (angles decreasing,
    IoUs increasing).
    """
    if list(angle_thresholds) != sorted(set(angle_thresholds), reverse=True):
        raise ValueError("angle_thresholds must be strictly decreasing")
    if list(iou_thresholds) != sorted(set(iou_thresholds)):
        raise ValueError("iou_thresholds must be strictly increasing")
    prepared = _prepare(dataset)
    angle_rows = tuple(
        SweepRow(a, _report(prepared, replace(base, angle_threshold=a)))
        for a in angle_thresholds
    )
    iou_rows = tuple(
        SweepRow(t, _report(prepared, replace(base, iou_threshold=t)))
        for t in iou_thresholds
    )
    return (
        SweepTable("angle", base.iou_threshold, angle_rows),
        SweepTable("iou", base.angle_threshold, iou_rows),
    )
