"""Rotation-anchor toolkit for oriented grasp-box detection.

Core pieces: exact oriented-box geometry and IoU, the anchor-grid
offset codec, positive/negative sample matching, the three-part
training loss with analytic gradients, the rectangle-metric evaluation
protocol with threshold sweeps, rolabelimg XML dataset plumbing, and a
desk-scale trainer that closes the encode -> loss -> gradient ->
decode -> evaluate loop.
"""

from .anchors import (
    Anchor,
    AnchorGridConfig,
    OffsetVector,
    OutputTensor,
    decode,
    deserialize_tensor,
    encode,
    margins,
    serialize_tensor,
    sigmoid,
    tensor_to_json,
    theta_margin,
)
from .annotations import (
    AnnotatedImage,
    parse_annotation,
    serialize_annotation,
    transform_labels,
)
from .errors import (
    AngleBinMismatch,
    AngleOutOfRange,
    CellMismatch,
    ConfigMismatch,
    DivergenceDetected,
    EmptyDataset,
    EmptyTrainingSet,
    InsufficientEntries,
    MalformedJsonl,
    MalformedXml,
    MissingField,
    OutOfImage,
    RamGraspError,
    UnknownImageId,
)
from .estimators import GridGraspRegressor, RotationAnchorEncoder
from .evaluation import (
    EvalCriteria,
    EvalReport,
    EvalSample,
    Prediction,
    accuracy,
    is_correct,
    judge_image,
    threshold_sweep,
)
from .geometry import (
    ConvexPolygon,
    GraspBox,
    angular_distance,
    box_to_polygon,
    oriented_iou,
    polygon_area,
    polygon_clip,
    raster_iou,
)
from .losses import LossBreakdown, LossWeights, compute_loss
from .manifests import (
    DatasetManifest,
    ManifestEntry,
    anchor_dims,
    anchor_dims_from,
    load_manifest,
    save_manifest,
    split,
)
from .matching import Assignment, angle_bin, cell_of, match
from .scenes import SyntheticScene, render_scene, render_scenes
from .training import LinearPredictor, evaluate_predictor, train

__version__ = "0.1.0"

__all__ = [
    "Anchor",
    "AnchorGridConfig",
    "AngleBinMismatch",
    "AngleOutOfRange",
    "AnnotatedImage",
    "Assignment",
    "CellMismatch",
    "ConfigMismatch",
    "ConvexPolygon",
    "DatasetManifest",
    "DivergenceDetected",
    "EmptyDataset",
    "EmptyTrainingSet",
    "EvalCriteria",
    "EvalReport",
    "EvalSample",
    "GraspBox",
    "GridGraspRegressor",
    "InsufficientEntries",
    "LinearPredictor",
    "LossBreakdown",
    "LossWeights",
    "MalformedJsonl",
    "MalformedXml",
    "ManifestEntry",
    "MissingField",
    "OffsetVector",
    "OutOfImage",
    "OutputTensor",
    "Prediction",
    "RamGraspError",
    "RotationAnchorEncoder",
    "SyntheticScene",
    "UnknownImageId",
    "accuracy",
    "anchor_dims",
    "anchor_dims_from",
    "angle_bin",
    "angular_distance",
    "box_to_polygon",
    "cell_of",
    "compute_loss",
    "decode",
    "deserialize_tensor",
    "encode",
    "evaluate_predictor",
    "is_correct",
    "judge_image",
    "load_manifest",
    "margins",
    "match",
    "oriented_iou",
    "parse_annotation",
    "polygon_area",
    "polygon_clip",
    "raster_iou",
    "render_scene",
    "render_scenes",
    "save_manifest",
    "serialize_annotation",
    "serialize_tensor",
    "sigmoid",
    "split",
    "tensor_to_json",
    "theta_margin",
    "threshold_sweep",
    "train",
    "transform_labels",
]
