"""Learner adapters: fit a whole hyperparameter grid on one training set.

A CART tree is grown once per training set and every size bound is read off
its prune sequence. SVR fits are independent per grid point but share the
Gram matrix for each kernel width.
"""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np

from .cart import PruneSequence, RegressionTree, grow, prune_sequence, select_by_size
from .svr import SvrModel, SvrParams, fit_svr, gram_matrix


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


class CartLearner:
    kind = "cart"

    def __init__(self, min_leaf: int = 1):
        self.min_leaf = min_leaf

    def fit_path(self, X: np.ndarray, y: np.ndarray) -> PruneSequence:
        return prune_sequence(grow(X, y, self.min_leaf))

    def models_for(self, path: PruneSequence, points: Sequence[int]) -> list:
        return [select_by_size(path, int(t)) for t in points]

    def fit(self, X, y, point: int) -> RegressionTree:
        return self.models_for(self.fit_path(X, y), [point])[0]

    @staticmethod
    def complexity(model: RegressionTree) -> float:
        return float(model.size)

    def describe(self, point) -> dict:
        return {"t": int(point)}

    def __repr__(self):
        return f"CartLearner(min_leaf={self.min_leaf})"


class _SvrPath:
    """Training data plus lazily built Gram matrices keyed by kernel width."""

    def __init__(self, X, y):
        self.X = X
        self.y = y
        self._grams: dict[float, np.ndarray] = {}

    def gram(self, gamma: float) -> np.ndarray:
        if gamma not in self._grams:
            self._grams[gamma] = gram_matrix(self.X, self.X, gamma)
        return self._grams[gamma]


class SvrLearner:
    kind = "svr"

    def __init__(self, tol: float = 1e-3, max_passes: int | None = None):
        self.tol = tol
        self.max_passes = max_passes

    def fit_path(self, X: np.ndarray, y: np.ndarray) -> _SvrPath:
        return _SvrPath(np.asarray(X, dtype=float), np.asarray(y, dtype=float))

    def models_for(self, path: _SvrPath, points: Sequence[Any]) -> list:
        out = []
        for q in points:
            q = as_svr_params(q)
            try:
                out.append(
                    fit_svr(
                        path.X, path.y, q, self.tol, self.max_passes, gram=path.gram(q.gamma)
                    )
                )
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                out.append(exc)
        return out

    def fit(self, X, y, point) -> SvrModel:
        res = self.models_for(self.fit_path(X, y), [point])[0]
        if isinstance(res, Exception):
            raise res
        return res

    @staticmethod
    def complexity(model: SvrModel) -> float:
        return model.weight_norm

    def describe(self, point) -> dict:
        q = as_svr_params(point)
        return {"C": q.C, "gamma": q.gamma, "epsilon": q.epsilon}

    def __repr__(self):
        return f"SvrLearner(tol={self.tol}, max_passes={self.max_passes})"


def as_svr_params(q) -> SvrParams:
    if isinstance(q, SvrParams):
        return q
    C, gamma, eps = q
    return SvrParams(float(C), float(gamma), float(eps))


def make_learner(kind: str, **options):
    if kind == "cart":
        return CartLearner(**options)
    if kind == "svr":
        return SvrLearner(**options)
    raise ValueError(f"unknown learner kind {kind!r}")
