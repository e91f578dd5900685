"""Independent reference implementations used by the tests."""

from __future__ import annotations

import math

import numpy as np

from penvf.svr import SvrParams


def brute_force_split(X, y, min_leaf=1, rtol=1e-12):
    """Scan every (feature, midpoint) pair, computing SSE with two-pass means.

    Returns (feature, threshold, sse) or None; near-ties within ``rtol`` of the
    parent SSE go to the lowest feature, then the lowest threshold.
    """
    X = [list(map(float, row)) for row in X]
    y = [float(v) for v in y]
    n, d = len(y), len(X[0])

    def sse(vals):
        if not vals:
            return 0.0
        mu = sum(vals) / len(vals)
        return sum((v - mu) ** 2 for v in vals)

    parent = sse(y)
    cands = []
    for k in range(d):
        values = sorted(set(row[k] for row in X))
        for a, b in zip(values, values[1:]):
            theta = (a + b) / 2
            left = [y[i] for i in range(n) if X[i][k] <= theta]
            right = [y[i] for i in range(n) if X[i][k] > theta]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            cands.append((k, theta, sse(left) + sse(right)))
    if not cands:
        return None
    best = min(c[2] for c in cands)
    tied = [c for c in cands if c[2] <= best + rtol * max(parent, 1e-300)]
    return min(tied, key=lambda c: (c[0], c[1]))


def svr_primal(beta, K, y, C, eps, bias):
    f = K @ beta + bias
    return 0.5 * beta @ K @ beta + C * np.maximum(np.abs(y - f) - eps, 0.0).sum()


def best_bias(beta, K, y, C, eps):
    """Exact minimiser of the primal over the bias for fixed coefficients.

    The objective is convex piecewise linear in b with kinks at r_i +/- eps,
    so it suffices to evaluate it at every kink.
    """
    r = y - K @ beta
    kinks = np.concatenate([r - eps, r + eps])
    vals = [svr_primal(beta, K, y, C, eps, b) for b in kinks]
    k = int(np.argmin(vals))
    return float(kinks[k]), float(vals[k])


def dual_value(beta, K, y, eps):
    return float(-0.5 * beta @ K @ beta + y @ beta - eps * np.abs(beta).sum())


def dual_lattice(n, C, steps=20):
    """Every beta in {-C..C step C/steps}^n with sum(beta) = 0, as rows.

    The last coordinate is fixed by the others (projection onto the equality
    constraint) and kept only when it lands inside the box.
    """
    ks = np.arange(-steps, steps + 1)
    head = np.array(np.meshgrid(*([ks] * (n - 1)), indexing="ij")).reshape(n - 1, -1).T
    last = -head.sum(axis=1)
    ok = np.abs(last) <= steps
    return np.column_stack([head[ok], last[ok]]) * (C / steps)


def lattice_extremes(K, y, C, eps, steps=20, chunk=20000):
    """(min primal with optimal bias, max dual) over the full dual lattice."""
    B = dual_lattice(len(y), C, steps)
    best_p, best_d = np.inf, -np.inf
    for s in range(0, len(B), chunk):
        b = B[s:s + chunk]
        quad = 0.5 * np.einsum("ij,jk,ik->i", b, K, b)
        R = y[None, :] - b @ K
        kinks = np.concatenate([R - eps, R + eps], axis=1)
        loss = np.maximum(np.abs(R[:, None, :] - kinks[:, :, None]) - eps, 0.0).sum(axis=2)
        best_p = min(best_p, float((quad[:, None] + C * loss).min()))
        best_d = max(best_d, float((-quad + b @ y - eps * np.abs(b).sum(axis=1)).max()))
    return best_p, best_d


def t_two_sided_p(t, df, dps=40):
    """Two-sided Student-t p-value by direct quadrature of the density."""
    import mpmath as mp

    mp.mp.dps = dps
    nu = mp.mpf(df)
    c = mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2))

    def dens(x):
        return c * (1 + x * x / nu) ** (-(nu + 1) / 2)

    a = abs(mp.mpf(t))
    tail = mp.quad(dens, [a, a + 1, a + 10, mp.inf])
    return float(2 * tail)


def round_half_up(x):
    return int(math.floor(x + 0.5))


def lattice_improvement(K, y, C, eps, threshold, steps=20, slack=1e-7, objective="primal"):
    """Search the dual lattice for a point whose objective beats ``threshold``.

    The lattice is {beta = k * C/steps : k integer, |k_i| <= steps, sum k = 0}.
    With ``objective="primal"`` a point's value is its primal objective under
    the exactly optimal bias and we look for value < threshold; with
    ``"dual"`` we look for a dual value > threshold. Both are convex
    minimisations in beta, so branch and bound with the continuous relaxation
    over integer boxes as lower bound visits every candidate that could beat
    the threshold. Returns (beta, value) of such a point or None.
    """
    import cvxpy as cp

    n = len(y)
    h = C / steps
    L = np.linalg.cholesky(K + 1e-12 * np.eye(n))
    b = cp.Variable(n)
    c = cp.Variable()
    lo = cp.Parameter(n)
    hi = cp.Parameter(n)
    if objective == "primal":
        obj = 0.5 * cp.sum_squares(L.T @ b) + C * cp.sum(cp.pos(cp.abs(y - K @ b - c) - eps))
        cons = []

        def value(beta):
            return best_bias(beta, K, y, C, eps)[1]
    else:
        obj = 0.5 * cp.sum_squares(L.T @ b) - y @ b + eps * cp.norm1(b)
        cons = [c == 0]
        threshold = -threshold

        def value(beta):
            return -dual_value(beta, K, y, eps)
    prob = cp.Problem(cp.Minimize(obj), [b >= lo, b <= hi, cp.sum(b) == 0, *cons])

    stack = [(np.full(n, -steps), np.full(n, steps))]
    while stack:
        klo, khi = stack.pop()
        if klo.sum() > 0 or khi.sum() < 0:
            continue
        if np.array_equal(klo, khi):
            beta = klo * h
            val = value(beta)
            if val < threshold:
                return beta, val if objective == "primal" else -val
            continue
        lo.value, hi.value = klo * h, khi * h
        prob.solve(solver=cp.CLARABEL)
        # prune only on a trusted bound; boxes are feasible by the sum check
        if prob.status == "optimal" and prob.value - slack * max(1.0, abs(prob.value)) >= threshold:
            continue
        # branch on the widest coordinate at the relaxed solution
        u = (klo + khi) / 2 if b.value is None else np.clip(b.value / h, klo, khi)
        width = khi - klo
        i = int(np.argmax(width))
        cut = int(np.clip(np.floor(u[i]), klo[i], khi[i] - 1))
        left_hi, right_lo = khi.copy(), klo.copy()
        left_hi[i], right_lo[i] = cut, cut + 1
        stack.append((right_lo, khi))
        stack.append((klo, left_hi))
    return None


def split_problem(rng):
    """Random (X, y, min_leaf) with n <= 25, d <= 3 and frequent duplicates."""
    n = int(rng.integers(2, 26))
    d = int(rng.integers(1, 4))
    kind = rng.integers(3)
    if kind == 0:
        X = rng.normal(size=(n, d))
        y = rng.normal(size=n)
    elif kind == 1:  # heavy duplication in features and targets
        X = rng.integers(0, 4, size=(n, d)).astype(float)
        y = rng.integers(0, 3, size=n).astype(float)
    else:
        X = np.round(rng.uniform(-2, 2, size=(n, d)), 1)
        y = np.round(rng.normal(size=n), 2)
    return X, y, int(rng.integers(1, 4))


def kkt_violations(model, X, y, tol):
    """Indices breaking the KKT certificate of an epsilon-SVR solution."""
    n = len(y)
    C, eps = model.params.C, model.params.epsilon
    beta = np.zeros(n)
    beta[model.support_index] = model.beta
    r = np.abs(y - model.predict(X))
    bad = []
    for i in range(n):
        b = abs(beta[i])
        if b == 0:
            ok = r[i] <= eps + tol
        elif b < C:
            ok = abs(r[i] - eps) <= tol
        else:
            ok = r[i] >= eps - tol
        if not ok:
            bad.append(i)
    return bad


def random_problem(rng, n_max=8, d_max=2):
    n = int(rng.integers(1, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.uniform(-1, 1, (n, d))
    y = np.sin(3 * X[:, 0]) + 0.3 * rng.normal(size=n)
    p = SvrParams(
        2.0 ** int(rng.integers(-2, 5)),
        2.0 ** int(rng.integers(-2, 3)),
        float(rng.choice([0.0, 0.05, 0.1, 0.2])),
    )
    return X, y, p


def full_beta(model, n):
    beta = np.zeros(n)
    beta[model.support_index] = model.beta
    return beta
