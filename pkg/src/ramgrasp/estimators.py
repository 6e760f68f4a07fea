"""Scikit-learn style wrappers so the anchor machinery composes with the
wider ecosystem (pipelines, clone, get_params/set_params).

Two estimators:

* RotationAnchorEncoder: a transformer between box coordinates and
  anchor offsets. fit() learns the shared anchor dimensions as the mean
  w/h of the training boxes; transform() emits (row, col, bin, t_x, t_y,
  t_w, t_h, t_theta) rows; inverse_transform() decodes them back.
* GridGraspRegressor: the toy trainer behind a fit/predict/score API.
  X rows are flattened cell-feature grids, y rows are (x, y, w, h,
  theta) boxes; score() is the rectangle-metric accuracy.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .anchors import AnchorGridConfig, OffsetVector, decode, encode
from .evaluation import EvalCriteria, EvalSample, Prediction, accuracy
from .geometry import GraspBox
from .losses import LossWeights
from .matching import angle_bin, cell_of
from .scenes import N_CELL_FEATURES, SyntheticScene
from .training import LinearPredictor, predict_box, train
from .validation import as_box_array, as_feature_matrix, require_pair


def _build_config(image_size, grid, anchors_per_cell, anchor_w, anchor_h):
    image_h, image_w = require_pair("image_size", image_size)
    rows, cols = require_pair("grid", grid)
    return AnchorGridConfig(
        image_h=image_h,
        image_w=image_w,
        grid_rows=int(rows),
        grid_cols=int(cols),
        anchors_per_cell=int(anchors_per_cell),
        anchor_w=anchor_w,
        anchor_h=anchor_h,
    )


class RotationAnchorEncoder(BaseEstimator, TransformerMixin):
    """Encode grasp boxes as (cell, bin, offsets) rows and back.

    Parameters
    ----------
    image_size : (H, W) pixels.
    grid : (N, M) cells.
    anchors_per_cell : number of angular bins k.
    anchor_dims : (w, h) shared anchor dimensions, or None to learn them
        from the training boxes in fit() as the mean w and h.
    """

    def __init__(
        self,
        image_size=(416.0, 416.0),
        grid=(13, 13),
        anchors_per_cell=3,
        anchor_dims=None,
    ):
        self.image_size = image_size
        self.grid = grid
        self.anchors_per_cell = anchors_per_cell
        self.anchor_dims = anchor_dims

    def fit(self, X, y=None):
        boxes = as_box_array(X)
        if self.anchor_dims is None:
            self.anchor_w_ = float(boxes[:, 2].mean())
            self.anchor_h_ = float(boxes[:, 3].mean())
        else:
            self.anchor_w_, self.anchor_h_ = require_pair(
                "anchor_dims", self.anchor_dims
            )
        self.config_ = _build_config(
            self.image_size,
            self.grid,
            self.anchors_per_cell,
            self.anchor_w_,
            self.anchor_h_,
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "config_"):
            raise NotFittedError("RotationAnchorEncoder is not fitted yet")

    def transform(self, X):
        """(n, 5) boxes -> (n, 8) [row, col, bin, t_x, t_y, t_w, t_h, t_theta]."""
        self._check_fitted()
        boxes = as_box_array(X)
        out = np.empty((len(boxes), 8))
        for i, row_vals in enumerate(boxes):
            box = GraspBox(*row_vals)
            row, col = cell_of(self.config_, box)
            m = angle_bin(self.config_, box.theta)
            t = encode(self.config_, self.config_.anchor(row, col, m), box)
            out[i] = (row, col, m, t.t_x, t.t_y, t.t_w, t.t_h, t.t_theta)
        return out

    def inverse_transform(self, Xt):
        """(n, 8) encoded rows -> (n, 5) boxes."""
        self._check_fitted()
        arr = np.asarray(Xt, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 8:
            raise ValueError(f"expected shape (n, 8), got {arr.shape}")
        out = np.empty((len(arr), 5))
        for i, row_vals in enumerate(arr):
            anchor = self.config_.anchor(
                int(row_vals[0]), int(row_vals[1]), int(row_vals[2])
            )
            box = decode(self.config_, anchor, OffsetVector(*row_vals[3:]))
            out[i] = box.as_tuple()
        return out


class GridGraspRegressor(BaseEstimator):
    """Linear grasp predictor trained by gradient descent through the
    anchor loss; predicts one box per feature grid.

    X rows are flattened (N * M * F) cell features; y rows are (x, y, w,
    h, theta) ground-truth boxes, one per sample.
    """

    def __init__(
        self,
        image_size=(416.0, 416.0),
        grid=(13, 13),
        anchors_per_cell=3,
        anchor_dims=None,
        n_cell_features=N_CELL_FEATURES,
        loss_lambdas=(2.0, 0.024, 10.0),
        steps=2000,
        learning_rate=1e-2,
        criteria=None,
    ):
        self.image_size = image_size
        self.grid = grid
        self.anchors_per_cell = anchors_per_cell
        self.anchor_dims = anchor_dims
        self.n_cell_features = n_cell_features
        self.loss_lambdas = loss_lambdas
        self.steps = steps
        self.learning_rate = learning_rate
        self.criteria = criteria

    def _scenes(self, X, y) -> list[SyntheticScene]:
        rows, cols = require_pair("grid", self.grid)
        n, m = int(rows), int(cols)
        feats = as_feature_matrix(X, n * m * self.n_cell_features)
        boxes = as_box_array(y, name="y")
        if len(feats) != len(boxes):
            raise ValueError("X and y have different lengths")
        return [
            SyntheticScene(
                features=f.reshape(n, m, self.n_cell_features),
                ground_truths=(GraspBox(*b),),
                rng_seed=i,
            )
            for i, (f, b) in enumerate(zip(feats, boxes))
        ]

    def fit(self, X, y):
        boxes = as_box_array(y, name="y")
        if self.anchor_dims is None:
            anchor_w = float(boxes[:, 2].mean())
            anchor_h = float(boxes[:, 3].mean())
        else:
            anchor_w, anchor_h = require_pair("anchor_dims", self.anchor_dims)
        self.config_ = _build_config(
            self.image_size, self.grid, self.anchors_per_cell, anchor_w, anchor_h
        )
        result = train(
            self._scenes(X, y),
            self.config_,
            weights=LossWeights(*self.loss_lambdas),
            steps=self.steps,
            learning_rate=self.learning_rate,
        )
        self.predictor_ = result.predictor
        self.loss_curve_ = result.loss_curve
        return self

    def _check_fitted(self):
        if not hasattr(self, "predictor_"):
            raise NotFittedError("GridGraspRegressor is not fitted yet")

    def _predictions(self, X) -> list[Prediction]:
        self._check_fitted()
        rows, cols = require_pair("grid", self.grid)
        n, m = int(rows), int(cols)
        feats = as_feature_matrix(X, n * m * self.n_cell_features)
        preds = []
        for i, f in enumerate(feats):
            scene = SyntheticScene(
                features=f.reshape(n, m, self.n_cell_features),
                ground_truths=(GraspBox(1, 1, 1, 1, 0),),  # placeholder, unused
                rng_seed=i,
            )
            preds.append(predict_box(self.predictor_, scene))
        return preds

    def predict(self, X):
        """(n, N*M*F) features -> (n, 5) decoded top-confidence boxes."""
        return np.array([p.box.as_tuple() for p in self._predictions(X)])

    def predict_confidence(self, X):
        """Confidence of the decoded box per sample, in (0, 1)."""
        return np.array([p.confidence for p in self._predictions(X)])

    def score(self, X, y):
        """Rectangle-metric accuracy of predict(X) against y."""
        boxes = as_box_array(y, name="y")
        preds = self._predictions(X)
        criteria = self.criteria if self.criteria is not None else EvalCriteria()
        samples = [
            EvalSample(
                image_id=f"sample-{i:06d}",
                predictions=(
                    Prediction(f"sample-{i:06d}", p.box, p.confidence),
                ),
                ground_truths=(GraspBox(*b),),
            )
            for i, (p, b) in enumerate(zip(preds, boxes))
        ]
        return accuracy(samples, criteria).accuracy
