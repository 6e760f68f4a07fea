"""Desk-scale trainer: a cell-shared linear predictor optimized by plain
full-batch gradient descent through the anchor loss.

The point of this module is pipeline closure, not model quality: targets
come from matching + encoding, gradients come solely from the loss
module, predictions decode back through the anchor grid, and the result
is judged by the rectangle metric. The batch loss is the per-image sum
divided by the number of scenes (the explicit normalization opt-in), so
the default learning rate is independent of the training set size.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .anchors import (
    CHANNELS,
    PREDICTOR_MAGIC,
    AnchorGridConfig,
    OutputTensor,
    decode,
    sigmoid,
)
from .errors import DivergenceDetected
from .evaluation import EvalCriteria, EvalReport, EvalSample, Prediction, accuracy
from .losses import LossWeights, loss_terms_arrays
from .matching import Assignment, match
from .scenes import N_CELL_FEATURES, SyntheticScene

DIVERGENCE_FACTOR = 10.0
# Smoothed-curve monotonicity guard (see train()).
_SMOOTH_WINDOW = 100
_SMOOTH_START = 200
_SMOOTH_SLACK = 1e-6


@dataclass
class LinearPredictor:
    """Cell-shared linear map from cell features to k x 6 raw outputs."""

    config: AnchorGridConfig
    weights: np.ndarray  # (F, k * 6)
    bias: np.ndarray  # (k * 6,)

    @classmethod
    def zeros(cls, config: AnchorGridConfig, n_features: int = N_CELL_FEATURES):
        k6 = config.anchors_per_cell * CHANNELS
        return cls(config, np.zeros((n_features, k6)), np.zeros(k6))

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def raw_values(self, features: np.ndarray) -> np.ndarray:
        """(N, M, F) features -> (N, M, k, 6) raw outputs."""
        n, m, k, c = self.config.shape
        flat = features.reshape(n * m, self.n_features) @ self.weights + self.bias
        return flat.reshape(n, m, k, c)

    def output_tensor(self, scene: SyntheticScene) -> OutputTensor:
        return OutputTensor(self.config, self.raw_values(scene.features))

    def save(self, path: str | Path) -> None:
        """Flat-float format, header family of the tensor serializer:
        magic 'RAMP', u32 (F, k, channels, 1), float32 weights row-major
        then float32 bias."""
        f, k6 = self.weights.shape
        k = self.config.anchors_per_cell
        header = PREDICTOR_MAGIC + struct.pack("<4I", f, k, CHANNELS, 1)
        payload = (
            self.weights.astype("<f4").tobytes() + self.bias.astype("<f4").tobytes()
        )
        Path(path).write_bytes(header + payload)

    @classmethod
    def load(cls, path: str | Path, config: AnchorGridConfig) -> "LinearPredictor":
        data = Path(path).read_bytes()
        if len(data) < 20 or data[:4] != PREDICTOR_MAGIC:
            raise ValueError("not a serialized predictor (bad magic)")
        f, k, c, _ = struct.unpack("<4I", data[4:20])
        if k != config.anchors_per_cell or c != CHANNELS:
            raise ValueError(
                f"predictor header (k={k}, channels={c}) does not match config"
            )
        flat = np.frombuffer(data, dtype="<f4", offset=20).astype(np.float64)
        k6 = k * c
        if flat.size != f * k6 + k6:
            raise ValueError("predictor payload has wrong length")
        return cls(config, flat[: f * k6].reshape(f, k6), flat[f * k6 :])


@dataclass
class TrainResult:
    predictor: LinearPredictor
    loss_curve: np.ndarray  # total (normalized) loss per step, length steps
    initial_loss: float
    final_loss: float


def _stack_assignments(
    config: AnchorGridConfig, scenes: Sequence[SyntheticScene]
) -> tuple[np.ndarray, np.ndarray]:
    assignments = [match(config, s.ground_truths) for s in scenes]
    conf = np.stack([a.conf_labels for a in assignments])
    targets = np.stack([a.targets for a in assignments])
    return conf, targets


def train(
    scenes: Sequence[SyntheticScene],
    config: AnchorGridConfig,
    weights: LossWeights = LossWeights(),
    steps: int = 2000,
    learning_rate: float = 1e-2,
) -> TrainResult:
    """Full-batch gradient descent; deterministic given identical inputs.

    Raises DivergenceDetected when the loss exceeds 10x its initial
    value, or when the smoothed curve (window 100) rises between any
    pair of steps 100 apart after step 200.
    """
    if len(scenes) < 100:
        raise ValueError("train expects at least 100 scenes")
    n, m, k, c = config.shape
    n_scenes = len(scenes)
    feats = np.stack([s.features.reshape(n * m, -1) for s in scenes])  # (S, NM, F)
    conf, targets = _stack_assignments(config, scenes)

    predictor = LinearPredictor.zeros(config, feats.shape[-1])
    w, b = predictor.weights, predictor.bias
    curve = np.empty(max(steps, 1))
    initial = None

    for step in range(max(steps, 1)):
        values = (feats @ w + b).reshape(n_scenes, n, m, k, c)
        l1, l2, l3, grad = loss_terms_arrays(values, conf, targets, weights)
        total = (
            weights.lambda1 * l1 + weights.lambda2 * l2 + weights.lambda3 * l3
        ) / n_scenes
        curve[step] = total
        if initial is None:
            initial = total
        if total > DIVERGENCE_FACTOR * initial:
            raise DivergenceDetected(
                f"loss {total:.4g} exceeded {DIVERGENCE_FACTOR}x initial {initial:.4g} "
                f"at step {step}"
            )
        if steps == 0:
            break
        grad_flat = grad.reshape(n_scenes, n * m, k * c) / n_scenes
        dw = np.einsum("scf,sco->fo", feats, grad_flat)
        db = grad_flat.sum(axis=(0, 1))
        w -= learning_rate * dw
        b -= learning_rate * db

    if steps == 0:
        curve = curve[:1]
    _check_smoothed_monotone(curve)
    return TrainResult(predictor, curve, float(curve[0]), float(curve[-1]))


def _check_smoothed_monotone(curve: np.ndarray) -> None:
    if len(curve) < _SMOOTH_START + 2 * _SMOOTH_WINDOW:
        return
    kernel = np.ones(_SMOOTH_WINDOW) / _SMOOTH_WINDOW
    smoothed = np.convolve(curve, kernel, mode="valid")
    lead = smoothed[_SMOOTH_START:-_SMOOTH_WINDOW]
    lag = smoothed[_SMOOTH_START + _SMOOTH_WINDOW :]
    if np.any(lag > lead * (1.0 + _SMOOTH_SLACK)):
        raise DivergenceDetected(
            "smoothed loss curve rose over a 100-step window after step 200"
        )


def predicted_anchor(predictor: LinearPredictor, scene: SyntheticScene):
    """Anchor with the highest confidence logit (row-major tie-break)."""
    config = predictor.config
    logits = predictor.raw_values(scene.features)[..., 0]
    row, col, bin_m = np.unravel_index(int(np.argmax(logits)), logits.shape)
    return config.anchor(int(row), int(col), int(bin_m))


def predict_box(
    predictor: LinearPredictor, scene: SyntheticScene
) -> Prediction:
    """Decode the top-confidence anchor of a scene into a prediction."""
    tensor = predictor.output_tensor(scene)
    anchor = predicted_anchor(predictor, scene)
    box = decode(predictor.config, anchor, tensor.offsets_at(anchor))
    conf = sigmoid(tensor.confidence_logit_at(anchor))
    return Prediction(scene.image_id, box, conf)


def evaluate_predictor(
    predictor: LinearPredictor,
    scenes: Sequence[SyntheticScene],
    criteria: EvalCriteria = EvalCriteria(),
) -> EvalReport:
    """Judge the decoded top-confidence box of each scene."""
    samples = [
        EvalSample(
            image_id=s.image_id,
            predictions=(predict_box(predictor, s),),
            ground_truths=s.ground_truths,
        )
        for s in scenes
    ]
    return accuracy(samples, criteria)
