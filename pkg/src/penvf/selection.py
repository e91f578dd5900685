"""Hyperparameter grids, the four selection procedures and complexity matching."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .cart import PruneSequence, RegressionTree, select_by_size
from .data import Dataset, Subsample, partition_folds
from .errors import ConfigError, SelectionError
from .learners import CartLearner, as_svr_params, round_half_up
from .metrics import mean_absolute_error
from .penalty import (
    DEFAULT_V_SWEEP,
    FoldTable,
    LearningRate,
    Loss,
    cv_constant,
    fit_learning_rate,
    fold_seed,
    fold_table,
)
from .svr import SvrModel, SvrParams

METHODS = ("vfcv", "penvf", "penvf+", "ideal")

SVR_C = tuple(2.0**k for k in range(-10, 13, 2))
SVR_GAMMA = tuple(2.0**k for k in range(-10, 3, 2))
SVR_EPSILON = (2.0**-4, 2.0**-3)
CART_SIZES = tuple(int(math.floor(2 ** (k / 2) - 1 + 0.5)) for k in range(2, 15))


@dataclass(frozen=True)
class HyperGrid:
    kind: str
    points: tuple

    def __len__(self):
        return len(self.points)

    def describe(self, g: int) -> dict:
        q = self.points[g]
        if self.kind == "cart":
            return {"t": int(q)}
        q = as_svr_params(q)
        return {"C": q.C, "gamma": q.gamma, "epsilon": q.epsilon}


def _check_list(name, values):
    if values is None:
        return None
    values = list(values)
    if not values:
        raise ConfigError(f"override list {name!r} is empty")
    if any(not (v > 0) for v in values):
        raise ConfigError(f"override list {name!r} must be positive")
    return values


def build_grid(
    kind: str,
    C: Sequence[float] | None = None,
    gamma: Sequence[float] | None = None,
    epsilon: Sequence[float] | None = None,
    sizes: Sequence[int] | None = None,
) -> HyperGrid:
    """Default grids, optionally overriding individual parameter lists.

    SVR points are ordered with C outermost, then gamma, then epsilon.
    """
    if kind == "cart":
        ts = _check_list("sizes", sizes) or list(CART_SIZES)
        return HyperGrid("cart", tuple(int(t) for t in ts))
    if kind == "svr":
        Cs = _check_list("C", C) or list(SVR_C)
        gs = _check_list("gamma", gamma) or list(SVR_GAMMA)
        es = _check_list("epsilon", epsilon) or list(SVR_EPSILON)
        pts = tuple(SvrParams(float(c), float(g), float(e)) for c in Cs for g in gs for e in es)
        return HyperGrid("svr", pts)
    raise ConfigError(f"unknown grid kind {kind!r}")


@dataclass
class SelectionResult:
    method: str
    V: int
    alpha: float
    index: int
    point: Any
    matched: dict
    final_model: Any
    criteria: np.ndarray
    test_mae: float | None = None
    flags: list = field(default_factory=list)

    def to_dict(self, grid: HyperGrid | None = None) -> dict:
        q = grid.describe(self.index) if grid is not None else self.point
        return {
            "method": self.method,
            "V": self.V,
            "alpha": self.alpha,
            "index": self.index,
            "point": q,
            "matched": self.matched,
            "criteria": [c if math.isfinite(c) else None for c in self.criteria.tolist()],
            "test_mae": self.test_mae,
            "flags": list(self.flags),
        }

    def to_json(self, grid: HyperGrid | None = None) -> str:
        return json.dumps(self.to_dict(grid))


def argmin_first(values: np.ndarray) -> int:
    """Index of the smallest finite value; ties resolved by grid order."""
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    if not finite.any():
        raise SelectionError("every grid point is invalid")
    return int(np.flatnonzero(finite & (v == v[finite].min()))[0])


def match_complexity_cart(fold_sizes: Sequence[float], seq: PruneSequence) -> tuple[RegressionTree, int]:
    """Tree from the all-data prune sequence sized like the fold trees."""
    t_hat = max(round_half_up(float(np.mean(fold_sizes))), 1)
    return select_by_size(seq, t_hat), t_hat


NORM_TIE_RTOL = 1e-12


def nearest_norm_index(norms: Sequence[float], Cs: Sequence[float], target: float) -> int:
    """Index whose norm is closest to ``target``; ties go to the smaller C.

    Distances within ``NORM_TIE_RTOL`` (relative to the target scale) count
    as ties so that rounding in ``|w - target|`` cannot break them.
    """
    dist = [abs(w - target) if math.isfinite(w) else math.inf for w in norms]
    finite = [d for d in dist if math.isfinite(d)]
    if not finite:
        raise SelectionError("no candidate norm available")
    bound = min(finite) + NORM_TIE_RTOL * max(1.0, abs(target))
    tied = [k for k, d in enumerate(dist) if d <= bound]
    return min(tied, key=lambda k: (Cs[k], k))


def match_complexity_svr(
    fold_norms: Sequence[float],
    point: SvrParams,
    candidates: Sequence[tuple[SvrParams, Any]],
) -> tuple[SvrModel, float, list]:
    """Refit-by-norm: pick the all-data fit at (gamma*, epsilon*) with norm nearest ``mean(fold_norms)``.

    ``candidates`` are (params, fitted model or exception) pairs trained on the
    full subsample. Non-converged or failed fits are skipped; if none remain,
    the fit at ``point`` itself is returned and flagged.
    """
    target = float(np.mean(fold_norms))
    pool = [
        (q, mdl)
        for q, mdl in candidates
        if q.gamma == point.gamma
        and q.epsilon == point.epsilon
        and isinstance(mdl, SvrModel)
        and mdl.converged
    ]
    if not pool:
        own = [mdl for q, mdl in candidates if q == point]
        if not own or isinstance(own[0], Exception):
            raise SelectionError(f"no usable all-data fit at {point}")
        return own[0], target, ["no_converged_refit"]
    k = nearest_norm_index([m.weight_norm for _, m in pool], [q.C for q, _ in pool], target)
    return pool[k][1], target, []


class SubsampleEvaluation:
    """Caches every fit needed to run all methods on one subsample.

    Fold tables are computed once per fold count, the all-data fits once per
    subsample, and learning rates once per fold-count sweep.
    """

    def __init__(
        self,
        learner,
        grid: HyperGrid,
        ds: Dataset,
        sub: Subsample,
        seed: int,
        loss: Loss = mean_absolute_error,
        test_indices: np.ndarray | None = None,
        v_sweep: Sequence[int] = DEFAULT_V_SWEEP,
    ):
        self.learner = learner
        self.grid = grid
        self.ds = ds
        self.sub = sub
        self.seed = seed
        self.loss = loss
        self.test_indices = None if test_indices is None else np.asarray(test_indices)
        self.v_sweep = tuple(sorted(set(int(v) for v in v_sweep)))
        self._tables: dict[int, FoldTable] = {}
        self._rates: list[LearningRate] | None = None
        self._full = None

    # all-data fits -------------------------------------------------------
    def _fit_full(self):
        X, y = self.ds.features[self.sub.indices], self.ds.targets[self.sub.indices]
        path = self.learner.fit_path(X, y)
        models = self.learner.models_for(path, self.grid.points)
        emp = np.full(len(models), np.inf)
        test = np.full(len(models), np.inf)
        for g, mdl in enumerate(models):
            if isinstance(mdl, Exception):
                continue
            emp[g] = self.loss(mdl.predict(X), y)
            if self.test_indices is not None:
                test[g] = self.loss(
                    mdl.predict(self.ds.features[self.test_indices]),
                    self.ds.targets[self.test_indices],
                )
        self._full = (path, models, emp, test)

    @property
    def full_path(self):
        if self._full is None:
            self._fit_full()
        return self._full[0]

    @property
    def full_models(self) -> list:
        if self._full is None:
            self._fit_full()
        return self._full[1]

    @property
    def empirical(self) -> np.ndarray:
        """Subsample loss of each all-data model."""
        if self._full is None:
            self._fit_full()
        return self._full[2]

    @property
    def test_losses(self) -> np.ndarray:
        if self.test_indices is None:
            raise SelectionError("no test set attached to this evaluation")
        if self._full is None:
            self._fit_full()
        return self._full[3]

    # fold-based quantities ----------------------------------------------
    def table(self, V: int) -> FoldTable:
        if V not in self._tables:
            part = partition_folds(self.sub, V, fold_seed(self.seed, V))
            self._tables[V] = fold_table(
                self.learner, self.grid.points, self.ds, self.sub, part, self.loss
            )
        return self._tables[V]

    def learning_rates(self) -> list[LearningRate]:
        if self._rates is None:
            tables = [self.table(V) for V in self.v_sweep]
            pens = np.array([t.pen(V - 1) for V, t in zip(self.v_sweep, tables)])
            self._rates = [
                fit_learning_rate(self.v_sweep, pens[:, g], self.sub.m)
                for g in range(len(self.grid))
            ]
        return self._rates

    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.learning_rates()])

    def penalty(self, method: str, V: int, alpha: float = 1.0) -> np.ndarray:
        """Per-point penalty of a penalised method (ideal: test minus empirical loss)."""
        if method == "penvf":
            return self.table(V).pen((V - 1) * alpha)
        if method == "penvf+":
            C_V = np.array([cv_constant(b, V) for b in self.betas()])
            return self.table(V).pen(C_V)
        if method == "ideal":
            return self.test_losses - self.empirical
        raise ConfigError(f"method {method!r} has no penalty")

    def criterion(self, method: str, V: int, alpha: float = 1.0) -> np.ndarray:
        if method == "vfcv":
            crit = self.table(V).vfcv()
        elif method in ("penvf", "penvf+"):
            crit = self.empirical + self.penalty(method, V, alpha)
        elif method == "ideal":
            crit = self.test_losses.copy()
        else:
            raise ConfigError(f"unknown method {method!r}")
        if method != "ideal":
            crit = np.where(self.table(V).valid, crit, np.inf)
        return np.where(np.isfinite(crit), crit, np.inf)

    # selection -------------------------------------------------------------
    def select(
        self,
        method: str,
        V: int,
        alpha: float = 1.0,
        eval_indices: np.ndarray | None = None,
    ) -> SelectionResult:
        crit = self.criterion(method, V, alpha)
        g = argmin_first(crit)
        point = self.grid.points[g]
        flags = []
        if method == "ideal":
            history = [self.learner.complexity(self.full_models[g])]
        else:
            history = self.table(V).complexity[g]
        if isinstance(self.learner, CartLearner):
            final, t_hat = match_complexity_cart(history, self.full_path)
            matched = {"t_star": int(point), "mean_size": float(np.mean(history)), "t_hat": t_hat}
        else:
            cands = list(zip(self.grid.points, self.full_models))
            final, target, flags = match_complexity_svr(history, as_svr_params(point), cands)
            matched = {
                "w_star": target,
                "gamma": as_svr_params(point).gamma,
                "epsilon": as_svr_params(point).epsilon,
                "C_hat": final.params.C if final.params else None,
                "w_hat": final.weight_norm,
            }
        if eval_indices is None:
            eval_indices = self.test_indices
        test_mae = None
        if eval_indices is not None:
            test_mae = mean_absolute_error(
                final.predict(self.ds.features[eval_indices]), self.ds.targets[eval_indices]
            )
        return SelectionResult(method, V, alpha, g, point, matched, final, crit, test_mae, flags)


def select(
    method: str,
    learner,
    grid: HyperGrid,
    ds: Dataset,
    sub: Subsample,
    V: int,
    alpha: float = 1.0,
    seed: int = 0,
    loss: Loss = mean_absolute_error,
    test_indices: np.ndarray | None = None,
    v_sweep: Sequence[int] = DEFAULT_V_SWEEP,
) -> SelectionResult:
    """Run one selection method end to end on a subsample."""
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "ideal" and test_indices is None:
        raise ConfigError("the ideal method needs a test set")
    ev = SubsampleEvaluation(learner, grid, ds, sub, seed, loss, test_indices, v_sweep)
    return ev.select(method, V, alpha)
