"""Resampling criteria: V-fold CV, the V-fold penalty and its learning-rate correction.

Notation used throughout: for fold ``j`` the fold model is trained on the
subsample minus block ``B_j``. ``heldout[j]`` is its loss on ``B_j``,
``train[j]`` its loss on its own training part and ``full[j]`` its loss on the
whole subsample. ``all_data`` is the loss on the subsample of the model
trained on all of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, FoldPartition, Subsample, partition_folds
from .errors import SizeError
from .metrics import mean_absolute_error
from .seeding import derive_seed

Loss = Callable[[np.ndarray, np.ndarray], float]

DEFAULT_V_SWEEP = tuple(range(2, 13))


def fold_seed(seed: int, V: int) -> int:
    """Seed of the V-fold partition of a subsample; shared by every V-sweep."""
    return derive_seed(seed, "folds", V)


@dataclass(frozen=True)
class FoldLosses:
    V: int
    heldout: np.ndarray
    train: np.ndarray
    full: np.ndarray
    all_data: float
    fold_sizes: np.ndarray

    @property
    def m(self) -> int:
        return int(self.fold_sizes.sum())

    def identity_residuals(self) -> np.ndarray:
        """full[j] minus its training/held-out decomposition (weighted by block size)."""
        w_out = self.fold_sizes / self.m
        return self.full - ((1.0 - w_out) * self.train + w_out * self.heldout)

    def scaled(self, c: float) -> "FoldLosses":
        return FoldLosses(
            self.V, c * self.heldout, c * self.train, c * self.full, c * self.all_data, self.fold_sizes
        )


def vfcv_criterion(fl: FoldLosses) -> float:
    return float(np.mean(fl.heldout))


def pen_vf(fl: FoldLosses, C_V: float) -> float:
    return float(C_V / fl.V * np.sum(fl.full - fl.train))


def penalised_criterion(fl: FoldLosses, C_V: float) -> float:
    return fl.all_data + pen_vf(fl, C_V)


def cv_constant(beta: float, V: int) -> float:
    """Penalty constant matching a learning rate ``beta``: (V-1)^beta / V^(beta-1)."""
    # written as a product so beta in {0, 1} give V and V-1 exactly
    return (V - 1) ** beta * V ** (1.0 - beta)


@dataclass(frozen=True)
class LearningRate:
    beta: float
    intercept: float  # log of the complexity term
    points: tuple[tuple[float, float], ...]
    valid_point_count: int
    fallback: bool = False
    raw_slope: float = float("nan")


def fit_learning_rate(Vs: Sequence[int], pens: Sequence[float], n: int) -> LearningRate:
    """Log-log regression of the penalty against the fold training size.

    ``pens[i]`` is the V-fold penalty at ``Vs[i]`` computed with C_V = V - 1.
    Points with a non-positive penalty are dropped; fewer than two valid
    points fall back to beta = 1.
    """
    order = np.argsort(np.asarray(Vs), kind="stable")
    xs, ys = [], []
    for k in order:
        V, pen = int(Vs[k]), float(pens[k])
        if not (pen > 0 and math.isfinite(pen)):
            continue
        xs.append(math.log(n * (V - 1) / V))
        ys.append(math.log(pen / (V - 1)) + math.log(V))
    points = tuple(zip(xs, ys))
    if len(set(xs)) < 2:
        return LearningRate(1.0, float("nan"), points, len(xs), fallback=True)
    x = np.array(xs)
    yv = np.array(ys)
    xc = x - x.mean()
    slope = float(xc @ (yv - yv.mean()) / (xc @ xc))
    intercept = float(yv.mean() - slope * x.mean())
    beta = min(max(-slope, 0.0), 1.0)
    return LearningRate(beta, intercept, points, len(xs), raw_slope=slope)


@dataclass
class FoldTable:
    """Fold losses for a whole grid at one partition (rows: grid points)."""

    V: int
    heldout: np.ndarray
    train: np.ndarray
    full: np.ndarray
    complexity: np.ndarray
    fold_sizes: np.ndarray
    errors: dict = field(default_factory=dict)  # grid index -> (fold, exception)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.heldout).all(axis=1)

    def vfcv(self) -> np.ndarray:
        return self.heldout.mean(axis=1)

    def pen_sum(self) -> np.ndarray:
        return (self.full - self.train).sum(axis=1)

    def pen(self, C_V) -> np.ndarray:
        return np.asarray(C_V) / self.V * self.pen_sum()

    def losses(self, g: int, all_data: float) -> FoldLosses:
        return FoldLosses(
            self.V, self.heldout[g].copy(), self.train[g].copy(), self.full[g].copy(),
            float(all_data), self.fold_sizes.copy(),
        )


def _positions(sub: Subsample, rows: np.ndarray) -> np.ndarray:
    return np.searchsorted(sub.indices, rows)


def fold_table(
    learner,
    points: Sequence,
    ds: Dataset,
    sub: Subsample,
    partition: FoldPartition,
    loss: Loss = mean_absolute_error,
) -> FoldTable:
    X, y = ds.features[sub.indices], ds.targets[sub.indices]
    G, V = len(points), partition.V
    heldout = np.full((G, V), np.nan)
    train = np.full((G, V), np.nan)
    full = np.full((G, V), np.nan)
    complexity = np.full((G, V), np.nan)
    errors = {}
    for j in range(V):
        out_pos = _positions(sub, partition.blocks[j])
        in_mask = np.ones(len(y), dtype=bool)
        in_mask[out_pos] = False
        try:
            path = learner.fit_path(X[in_mask], y[in_mask])
            models = learner.models_for(path, points)
        except Exception as exc:  # noqa: BLE001 - a failed fold invalidates every point
            models = [exc] * G
        for g, model in enumerate(models):
            if isinstance(model, Exception):
                errors.setdefault(g, (j, model))
                continue
            pred = model.predict(X)
            full[g, j] = loss(pred, y)
            train[g, j] = loss(pred[in_mask], y[in_mask])
            heldout[g, j] = loss(pred[out_pos], y[out_pos])
            complexity[g, j] = learner.complexity(model)
    for g in errors:
        heldout[g] = train[g] = full[g] = np.nan
    return FoldTable(V, heldout, train, full, complexity, partition.sizes, errors)


def fold_losses(
    learner,
    point,
    ds: Dataset,
    sub: Subsample,
    partition: FoldPartition,
    loss: Loss = mean_absolute_error,
) -> FoldLosses:
    """Fold losses of one hyperparameter point, plus the all-data loss."""
    table = fold_table(learner, [point], ds, sub, partition, loss)
    if 0 in table.errors:
        j, exc = table.errors[0]
        raise RuntimeError(f"learner failed on fold {j}: {exc}") from exc
    X, y = ds.features[sub.indices], ds.targets[sub.indices]
    model = learner.fit(X, y, point)
    return table.losses(0, loss(model.predict(X), y))


def estimate_beta(
    learner,
    point,
    ds: Dataset,
    sub: Subsample,
    V_set: Sequence[int] = DEFAULT_V_SWEEP,
    seed: int = 0,
    loss: Loss = mean_absolute_error,
) -> LearningRate:
    """Learning rate of one hyperparameter point from a sweep over fold counts."""
    if len(V_set) < 2:
        raise SizeError("the fold-count sweep needs at least two values")
    Vs = sorted(set(int(v) for v in V_set))
    pens = []
    for V in Vs:
        part = partition_folds(sub, V, fold_seed(seed, V))
        fl = fold_table(learner, [point], ds, sub, part, loss)
        pens.append(float(fl.pen(V - 1)[0]))
    return fit_learning_rate(Vs, pens, sub.m)


@dataclass(frozen=True)
class IdealPenalty:
    value: float
    gap: float


def ideal_penalty(
    learner,
    point,
    ds: Dataset,
    sub: Subsample,
    test_indices: np.ndarray,
    loss: Loss = mean_absolute_error,
    pen_value: float = float("nan"),
) -> IdealPenalty:
    """Test loss minus subsample loss of the all-data model at ``point``."""
    test_indices = np.asarray(test_indices)
    if test_indices.size == 0:
        raise SizeError("ideal penalty needs a non-empty test set")
    X, y = ds.features[sub.indices], ds.targets[sub.indices]
    model = learner.fit(X, y, point)
    value = loss(model.predict(ds.features[test_indices]), ds.targets[test_indices]) - loss(
        model.predict(X), y
    )
    return IdealPenalty(float(value), float(pen_value - value))
