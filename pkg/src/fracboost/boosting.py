"""Gradient boosting over regression trees.

The model is ``F(x) = F0 + sum_m shrinkage * b_m * h_m(x)`` where each tree
``h_m`` is fit by least squares to the loss anti-gradient and ``b_m`` is found
by an exact one-dimensional minimization of the training loss.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .data import Dataset, EncodedMatrix, EncodingMap, FeatureSchema, SchemaError, encode
from .tree import RegressionTree, fit_tree, presort

logger = logging.getLogger(__name__)


class SquaredLoss:
    """L(y, F) = (y - F)^2 / 2."""

    kind = "squared"

    def evaluate(self, y, F):
        r = np.asarray(y, dtype=float) - np.asarray(F, dtype=float)
        return 0.5 * r * r

    def negative_gradient(self, y, F):
        return np.asarray(y, dtype=float) - np.asarray(F, dtype=float)

    def init_estimate(self, y: np.ndarray) -> float:
        if np.all(y == y[0]):
            return float(y[0])
        return float(np.mean(y))

    def line_search(self, y, F, h) -> float:
        r = np.asarray(y, dtype=float) - np.asarray(F, dtype=float)
        h = np.asarray(h, dtype=float)
        hh = float(np.dot(h, h))
        if hh == 0.0:
            return 0.0
        return float(np.dot(r, h)) / hh


class AbsoluteLoss:
    """L(y, F) = |y - F|; the anti-gradient uses sign(0) = 0."""

    kind = "absolute"

    def evaluate(self, y, F):
        return np.abs(np.asarray(y, dtype=float) - np.asarray(F, dtype=float))

    def negative_gradient(self, y, F):
        return np.sign(np.asarray(y, dtype=float) - np.asarray(F, dtype=float))

    def init_estimate(self, y: np.ndarray) -> float:
        return float(np.median(y))

    def line_search(self, y, F, h) -> float:
        """Weighted median of r_i / h_i with weights |h_i|; smallest minimizer."""
        r = np.asarray(y, dtype=float) - np.asarray(F, dtype=float)
        h = np.asarray(h, dtype=float)
        nz = h != 0
        if not nz.any():
            return 0.0
        z = r[nz] / h[nz]
        w = np.abs(h[nz])
        order = np.argsort(z, kind="stable")
        z, w = z[order], w[order]
        cw = np.cumsum(w)
        k = int(np.searchsorted(2.0 * cw, cw[-1], side="left"))
        return float(z[min(k, len(z) - 1)])


LOSSES = {"squared": SquaredLoss, "absolute": AbsoluteLoss}


def get_loss(kind: str):
    try:
        return LOSSES[kind]()
    except KeyError:
        raise ValueError(f"unknown loss {kind!r}; choose from {sorted(LOSSES)}") from None


def pseudo_residuals(loss, y, F) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    if y.shape != F.shape:
        raise ValueError("y and F must have equal length")
    return loss.negative_gradient(y, F)


def line_search(loss, y, F, h) -> float:
    y, F, h = (np.asarray(a, dtype=float) for a in (y, F, h))
    if not y.shape == F.shape == h.shape:
        raise ValueError("y, F and h must have equal length")
    return loss.line_search(y, F, h)


@dataclass(frozen=True)
class BoostConfig:
    n_iterations: int = 100
    max_depth: int = 3
    min_leaf: int = 5
    shrinkage: float = 0.1
    loss: str = "squared"
    seed: int = 0

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        get_loss(self.loss)


@dataclass
class BoostedModel:
    base_prediction: float
    stages: list[tuple[float, RegressionTree]]
    shrinkage: float
    loss: str
    schema: Optional[FeatureSchema] = None
    encoding_map: EncodingMap = field(default_factory=dict)
    feature_names: tuple[str, ...] = ()
    train_loss: list[float] = field(default_factory=list)

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def _coefs(self):
        return [(self.shrinkage * b, tree) for b, tree in self.stages]

    def staged_predict_matrix(self, X) -> Iterator[np.ndarray]:
        """Predictions after 0, 1, ..., M stages."""
        X = X.values if isinstance(X, EncodedMatrix) else np.asarray(X, dtype=float)
        pred = np.full(X.shape[0], self.base_prediction)
        yield pred
        for coef, tree in self._coefs():
            pred = pred + coef * tree.predict(X)
            yield pred

    def predict_matrix(self, X) -> np.ndarray:
        X = X.values if isinstance(X, EncodedMatrix) else np.asarray(X, dtype=float)
        if self.feature_names and X.shape[1] != len(self.feature_names):
            raise ValueError(f"matrix has {X.shape[1]} features, model expects "
                             f"{len(self.feature_names)}")
        pred = np.full(X.shape[0], self.base_prediction)
        for coef, tree in self._coefs():
            pred = pred + coef * tree.predict(X)
        return pred

    def encode(self, dataset: Dataset) -> EncodedMatrix:
        if self.schema is not None:
            check_schema_compatible(self.schema, dataset.schema)
        return encode(dataset, self.encoding_map)


def check_schema_compatible(expected: FeatureSchema, actual: FeatureSchema) -> None:
    """Raise on the first feature column that differs between two schemas."""
    actual_features = {c.name: c for c in actual.features}
    for c in expected.features:
        got = actual_features.get(c.name)
        if got is None:
            raise SchemaError(f"feature column {c.name!r} expected by the model is absent")
        if got.kind != c.kind:
            raise SchemaError(f"feature column {c.name!r} is {got.kind}, model expects {c.kind}")
    names = [c.name for c in expected.features]
    for c in actual.features:
        if c.name not in names:
            raise SchemaError(f"feature column {c.name!r} is unknown to the model")
    if [c.name for c in actual.features] != names:
        raise SchemaError("feature column order differs from the model's schema")


def predict(model: BoostedModel, dataset: Dataset) -> np.ndarray:
    return model.predict_matrix(model.encode(dataset))


def fit_gbm(matrix, y, config: BoostConfig, schema: Optional[FeatureSchema] = None,
            trace: Optional[list] = None) -> BoostedModel:
    """Fit a boosted model.

    If ``trace`` is given, the training-set prediction after every stage is
    appended to it (stage 0 is the constant base prediction).
    """
    if isinstance(matrix, EncodedMatrix):
        X = matrix.values
        encoding_map, names = matrix.encoding_map, matrix.feature_names
    else:
        X = np.asarray(matrix, dtype=float)
        encoding_map, names = {}, tuple(f"x{j}" for j in range(X.shape[1]))
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("matrix rows and y length differ")
    if len(y) < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")

    loss = get_loss(config.loss)
    F0 = loss.init_estimate(y)
    F = np.full(len(y), F0)
    losses = [float(np.mean(loss.evaluate(y, F)))]
    if trace is not None:
        trace.append(F)
    order = presort(X)
    stages = []
    for m in range(config.n_iterations):
        g = pseudo_residuals(loss, y, F)
        tree = fit_tree(X, g, config.max_depth, config.min_leaf, order=order)
        h = tree.predict(X)
        b = line_search(loss, y, F, h)
        F_new = F + (config.shrinkage * b) * h
        new_loss = float(np.mean(loss.evaluate(y, F_new)))
        if new_loss > losses[-1]:
            # b = 0 is always a candidate of the step-size search
            b = 0.0
            F_new = F + (config.shrinkage * b) * h
            new_loss = float(np.mean(loss.evaluate(y, F_new)))
        F = F_new
        stages.append((b, tree))
        losses.append(new_loss)
        if trace is not None:
            trace.append(F)
    logger.debug("fit %d stages, final training loss %.6g", len(stages), losses[-1])
    return BoostedModel(F0, stages, config.shrinkage, config.loss, schema,
                        dict(encoding_map), tuple(names), losses)
