"""Epsilon-insensitive support vector regression with a Gaussian RBF kernel.

The dual is solved by SMO on the doubled variable vector ``a = (alpha, alpha*)``
with second-order working-set selection. Coefficients of the expansion are
``beta = alpha - alpha*``; they satisfy ``sum(beta) == 0`` and ``|beta| <= C``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, SizeError

_TAU = 1e-12


@dataclass(frozen=True)
class SvrParams:
    C: float
    gamma: float
    epsilon: float

    def __post_init__(self):
        if not (self.C > 0 and self.gamma > 0 and self.epsilon >= 0):
            raise ValueError(f"invalid SVR parameters {self}")


def rbf_kernel(u, v, gamma: float) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ShapeError(f"kernel arguments differ in shape: {u.shape} vs {v.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    diff = u - v
    return math.exp(-gamma * float(diff @ diff))


def gram_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise RBF kernel values between the rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"feature counts differ: {A.shape[1]} vs {B.shape[1]}")
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(eq=False)
class SvrModel:
    support_vectors: np.ndarray
    beta: np.ndarray  # coefficients of the retained support vectors
    bias: float
    gamma: float
    weight_norm: float
    params: SvrParams | None = None
    converged: bool = True
    n_iter: int = 0
    kkt_violation: float = 0.0
    support_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_support(self) -> int:
        return len(self.beta)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_support == 0:
            return np.full(X.shape[0], self.bias)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ShapeError(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        return gram_matrix(X, self.support_vectors, self.gamma) @ self.beta + self.bias

    predict = decision

    def slacks(self, X, y) -> tuple[np.ndarray, np.ndarray]:
        """Post-hoc slack diagnostics (xi, xi*) for a sample."""
        eps = self.params.epsilon if self.params else 0.0
        r = np.asarray(y, dtype=float) - self.predict(X)
        return np.maximum(0.0, r - eps), np.maximum(0.0, -r - eps)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "bias": self.bias,
            "gamma": self.gamma,
            "support_vectors": self.support_vectors.tolist(),
            "weight_norm": self.weight_norm,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "SvrModel":
        sv = np.asarray(doc["support_vectors"], dtype=float)
        beta = np.asarray(doc["beta"], dtype=float)
        return cls(
            sv.reshape(len(beta), -1) if len(beta) else sv.reshape(0, 0),
            beta,
            float(doc["bias"]),
            float(doc["gamma"]),
            float(doc.get("weight_norm", 0.0)),
            converged=bool(doc.get("converged", True)),
        )


def _norm_from(beta: np.ndarray, K: np.ndarray) -> float:
    return math.sqrt(max(float(beta @ K @ beta), 0.0))


def weight_norm(model: SvrModel) -> float:
    """RKHS norm of the fitted function, sqrt(beta' K beta)."""
    if model.n_support == 0:
        return 0.0
    K = gram_matrix(model.support_vectors, model.support_vectors, model.gamma)
    return _norm_from(model.beta, K)


def predict_svr(model: SvrModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("expected a single feature vector")
    if model.n_support and x.shape[0] != model.support_vectors.shape[1]:
        raise ShapeError(
            f"expected {model.support_vectors.shape[1]} features, got {x.shape[0]}"
        )
    return float(model.predict(x[None, :])[0])


def dual_objective(beta: np.ndarray, K: np.ndarray, y: np.ndarray, epsilon: float) -> float:
    """Dual objective to be maximised (feasible ``beta`` assumed)."""
    return float(-0.5 * beta @ K @ beta + y @ beta - epsilon * np.abs(beta).sum())


def primal_objective(
    beta: np.ndarray, bias: float, K: np.ndarray, y: np.ndarray, C: float, epsilon: float
) -> float:
    """0.5 ||w||^2 + C * sum of epsilon-insensitive losses, for f = K beta + b."""
    f = K @ beta + bias
    return float(0.5 * beta @ K @ beta + C * np.maximum(np.abs(y - f) - epsilon, 0.0).sum())


@dataclass
class SmoTrace:
    """Optional per-iteration record of the dual objective."""

    dual_values: list = field(default_factory=list)


def fit_svr(
    X: np.ndarray,
    y: np.ndarray,
    params: SvrParams,
    tol: float = 1e-3,
    max_passes: int | None = None,
    gram: np.ndarray | None = None,
    trace: SmoTrace | None = None,
) -> SvrModel:
    """Solve the epsilon-SVR dual by SMO.

    Stops when the maximal KKT violation ``m(a) - M(a)`` drops below ``tol``
    or after ``max_passes * n`` pair updates (default ``max_passes = 10 n``),
    in which case the model is returned with ``converged=False``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 1:
        raise SizeError("SVR needs at least one sample")
    if X.shape[0] != n:
        raise ShapeError(f"X has {X.shape[0]} rows, y has {n}")
    C, eps = float(params.C), float(params.epsilon)
    K = gram_matrix(X, X, params.gamma) if gram is None else gram
    if max_passes is None:
        max_passes = 10 * n
    max_iter = max_passes * n

    # doubled problem: min 0.5 a'Qa + p'a, sum(s*a) = 0, 0 <= a <= C
    s = np.concatenate([np.ones(n), -np.ones(n)])
    idx = np.concatenate([np.arange(n), np.arange(n)])
    p = np.concatenate([eps - y, eps + y])
    a = np.zeros(2 * n)
    G = p.copy()
    diagK = np.diag(K)

    it = 0
    converged = False
    gap = np.inf
    while True:
        sg = -s * G
        up = ((s > 0) & (a < C)) | ((s < 0) & (a > 0))
        low = ((s > 0) & (a > 0)) | ((s < 0) & (a < C))
        if not up.any() or not low.any():
            gap = 0.0
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(sg[up])])
        m_up = sg[i]
        M_low = sg[low].min()
        gap = m_up - M_low
        if gap < tol:
            converged = True
            break
        if it >= max_iter:
            break
        # second-order choice of j among violating low indices
        Ki = K[idx[i]]
        cand = low & (sg < m_up)
        b = m_up - sg[cand]
        quad = diagK[idx[i]] + diagK[idx[cand]] - 2.0 * Ki[idx[cand]]
        quad = np.where(quad > 0, quad, _TAU)
        cj = np.flatnonzero(cand)
        j = int(cj[np.argmin(-(b * b) / quad)])

        a_i, a_j = a[i], a[j]
        qd = diagK[idx[i]] + diagK[idx[j]] - 2.0 * Ki[idx[j]]
        if qd <= 0:
            qd = _TAU
        if s[i] != s[j]:
            delta = (-G[i] - G[j]) / qd
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            elif a[j] > C:
                a[j] = C
                a[i] = C + diff
        else:
            delta = (G[i] - G[j]) / qd
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            elif a[j] < 0:
                a[j] = 0.0
                a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = total
        da_i, da_j = a[i] - a_i, a[j] - a_j
        # column t of Q is s * s_t * K[:, idx_t]
        G += s * (s[i] * da_i * K[idx, idx[i]] + s[j] * da_j * K[idx, idx[j]])
        it += 1
        if trace is not None:
            beta_t = a[:n] - a[n:]
            trace.dual_values.append(dual_objective(beta_t, K, y, eps))

    beta = a[:n] - a[n:]
    bias = _bias(a, G, s, C)
    nz = np.flatnonzero(beta != 0.0)
    return SvrModel(
        support_vectors=X[nz].copy(),
        beta=beta[nz].copy(),
        bias=bias,
        gamma=float(params.gamma),
        weight_norm=_norm_from(beta[nz], K[np.ix_(nz, nz)]),
        params=params,
        converged=converged,
        n_iter=it,
        kkt_violation=float(gap),
        support_index=nz,
    )


def _bias(a, G, s, C) -> float:
    """Mean implied bias over free variables, else the feasible-interval midpoint."""
    sg = s * G
    free = (a > 0) & (a < C)
    if free.any():
        rho = sg[free].mean()
    else:
        upper_bound = ((s > 0) & (a >= C)) | ((s < 0) & (a <= 0))
        lower_bound = ((s > 0) & (a <= 0)) | ((s < 0) & (a >= C))
        ub = sg[lower_bound].min() if lower_bound.any() else np.inf
        lb = sg[upper_bound].max() if upper_bound.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = 0.5 * (ub + lb)
        else:
            rho = ub if np.isfinite(ub) else lb
    return float(-rho)
