"""Three-part training loss with closed-form gradients.

For confidence logits c and offset predictions t_hat against an
assignment's labels:

    loss1 = sum over positive anchors of -ln(sigmoid(c))
    loss2 = sum over negative anchors of -ln(1 - sigmoid(c))
    loss3 = sum over positive anchors of sum_i (t_hat_i - t_i)^2
    total = lambda1 * loss1 + lambda2 * loss2 + lambda3 * loss3

All three are plain sums, not means; normalizing by batch size is an
explicit opt-in. The log-sigmoid terms are evaluated in softplus form so
extreme logits cannot overflow, and the returned gradient holds
d total / d entry for every tensor entry:

    d loss1 / d c     = sigmoid(c) - 1      (positive anchors)
    d loss2 / d c     = sigmoid(c)          (negative anchors)
    d loss3 / d t_hat = 2 (t_hat - t)       (positive anchors)
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .anchors import OutputTensor
from .errors import ConfigMismatch
from .matching import Assignment


@dataclass(frozen=True)
class LossWeights:
    """Relative importance of the three loss components."""

    lambda1: float = 2.0
    lambda2: float = 0.024
    lambda3: float = 10.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class LossBreakdown:
    loss1: float
    loss2: float
    loss3: float
    total: float
    gradient: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {
                "loss1": self.loss1,
                "loss2": self.loss2,
                "loss3": self.loss3,
                "total": self.total,
            },
            sort_keys=True,
        )


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_terms_arrays(
    values: np.ndarray,
    conf_labels: np.ndarray,
    offset_targets: np.ndarray,
    weights: LossWeights,
) -> tuple[float, float, float, np.ndarray]:
    """Array engine behind compute_loss.

    values: (..., 6) raw predictions; conf_labels: (...,) in {0, 1};
    offset_targets: (..., 5). Leading dimensions are arbitrary, so a
    batch of images can be stacked and summed in one call. Returns
    (loss1, loss2, loss3, gradient) with gradient shaped like values.
    """
    logits = values[..., 0]
    t_hat = values[..., 1:]
    pos = conf_labels == 1.0
    neg = ~pos

    loss1 = float(np.sum(_softplus(-logits[pos])))
    loss2 = float(np.sum(_softplus(logits[neg])))
    resid = t_hat - offset_targets
    loss3 = float(np.sum(resid[pos] ** 2))

    grad = np.zeros_like(values)
    sig = _sigmoid(logits)
    grad[..., 0] = np.where(
        pos, weights.lambda1 * (sig - 1.0), weights.lambda2 * sig
    )
    grad[..., 1:] = weights.lambda3 * 2.0 * resid * pos[..., None]
    return loss1, loss2, loss3, grad


def compute_loss(
    output: OutputTensor, assignment: Assignment, weights: LossWeights
) -> LossBreakdown:
    """Loss and gradient for one image's output tensor."""
    if output.config != assignment.config:
        raise ConfigMismatch(
            "output tensor and assignment use different grid configurations"
        )
    loss1, loss2, loss3, grad = loss_terms_arrays(
        output.values, assignment.conf_labels, assignment.targets, weights
    )
    total = weights.lambda1 * loss1 + weights.lambda2 * loss2 + weights.lambda3 * loss3
    return LossBreakdown(loss1, loss2, loss3, total, grad)
