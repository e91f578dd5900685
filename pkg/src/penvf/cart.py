"""CART regression trees with one-shot cost-complexity pruning.

Trees are grown greedily on squared error and stored as flat arrays in
preorder. A pruned tree is a view of the grown tree at a pruning level
``sigma``: every internal node whose alpha value is ``<= sigma`` acts as a
leaf. A prune sequence is therefore just a list of levels over shared arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import ShapeError, SizeError

# Candidate splits whose SSE lies within this fraction of the parent SSE of
# the best one are treated as ties and resolved by (feature, threshold) order.
TIE_RTOL = 1e-12


class Split(NamedTuple):
    feature: int
    threshold: float
    sse: float


@njit(cache=True)
def _split_kernel(X, y, min_leaf):
    n, d = X.shape
    mean = 0.0
    for i in range(n):
        mean += y[i]
    mean /= n
    c = y - mean
    parent = 0.0
    for i in range(n):
        parent += c[i] * c[i]
    t1 = 0.0
    for i in range(n):
        t1 += c[i]
    sse = np.full((n - 1, d), np.inf)
    xs = np.empty((n, d))
    for k in range(d):
        order = np.argsort(X[:, k], kind="mergesort")
        s1 = 0.0
        s2 = 0.0
        for p in range(n):
            xs[p, k] = X[order[p], k]
        for p in range(n - 1):
            v = c[order[p]]
            s1 += v
            s2 += v * v
            nl = p + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf or not xs[p + 1, k] > xs[p, k]:
                continue
            rs1 = t1 - s1
            val = (s2 - s1 * s1 / nl) + ((parent - s2) - rs1 * rs1 / nr)
            sse[p, k] = val if val > 0.0 else 0.0
    best = np.inf
    for k in range(d):
        for p in range(n - 1):
            if sse[p, k] < best:
                best = sse[p, k]
    if best == np.inf:
        return -1, 0.0, 0.0, np.inf
    bound = best + TIE_RTOL * max(parent, 1e-300)
    # lowest feature first, then lowest threshold
    for k in range(d):
        for p in range(n - 1):
            if sse[p, k] <= bound:
                return k, xs[p, k], xs[p + 1, k], sse[p, k]
    return -1, 0.0, 0.0, np.inf


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int = 1) -> Split | None:
    """Squared-error optimal axis-aligned split of ``(X, y)``.

    Thresholds are midpoints between consecutive distinct feature values and
    both children must hold at least ``min_leaf`` samples. Near-equal
    objectives (see ``TIE_RTOL``) go to the lowest feature, then the lowest
    threshold. Returns ``None`` when no admissible threshold exists.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = X.shape[0]
    if n < 2 or n < 2 * min_leaf:
        return None
    k, lo, hi, sse = _split_kernel(X, y, min_leaf)
    if k < 0:
        return None
    theta = 0.5 * (lo + hi)
    if not lo <= theta < hi:
        theta = lo
    return Split(int(k), float(theta), float(sse))


@dataclass(eq=False)
class _Grown:
    """Shared storage of a grown tree (preorder arrays)."""

    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray  # -1 at leaves
    right: np.ndarray
    value: np.ndarray  # mean target of the node's samples
    node_sse: np.ndarray
    n_samples: np.ndarray
    sample_indices: list  # per node, positions into the training arrays
    alpha: np.ndarray  # nan at grown leaves
    anc_min_alpha: np.ndarray  # min alpha over strict ancestors (+inf at root)
    subtree_sse: np.ndarray  # training SSE of the unpruned subtree under each node
    min_leaf: int
    n_features: int


@dataclass(frozen=True)
class TreeNode:
    index: int
    sample_indices: np.ndarray
    node_sse: float
    leaf_mean: float
    split_feature: int | None = None
    split_threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class RegressionTree:
    """A grown tree, optionally viewed at a pruning level ``sigma``."""

    def __init__(self, grown: _Grown, sigma: float = -np.inf):
        self._g = grown
        self.sigma = float(sigma)
        internal = grown.feature >= 0
        self._present = grown.anc_min_alpha > self.sigma
        self._acts_leaf = ~internal | (grown.alpha <= self.sigma)
        self.size = int(self._present.sum())
        self.leaf_count = int((self._present & self._acts_leaf).sum())

    @property
    def min_leaf(self) -> int:
        return self._g.min_leaf

    @property
    def n_features(self) -> int:
        return self._g.n_features

    @property
    def root(self) -> TreeNode:
        return self._node(0)

    def _node(self, i: int) -> TreeNode:
        g = self._g
        if self._acts_leaf[i]:
            return TreeNode(i, g.sample_indices[i], float(g.node_sse[i]), float(g.value[i]))
        return TreeNode(
            i,
            g.sample_indices[i],
            float(g.node_sse[i]),
            float(g.value[i]),
            int(g.feature[i]),
            float(g.threshold[i]),
            self._node(int(g.left[i])),
            self._node(int(g.right[i])),
        )

    def nodes(self) -> np.ndarray:
        """Preorder indices (into the grown arrays) of the nodes of this tree."""
        return np.flatnonzero(self._present)

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self._present & self._acts_leaf)

    def training_sse(self) -> float:
        return float(self._g.node_sse[self.leaves()].sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf reached by each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        g = self._g
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = ~self._acts_leaf[node]
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, g.feature[nd]] <= g.threshold[nd]
            node[r] = np.where(go_left, g.left[nd], g.right[nd])
            active[r] = ~self._acts_leaf[node[r]]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self._g.value[self.apply(X)]

    def to_dict(self) -> dict:
        def enc(node: TreeNode) -> dict:
            out = {"mu": node.leaf_mean, "n": len(node.sample_indices)}
            if not node.is_leaf:
                out.update(
                    k=node.split_feature,
                    theta=node.split_threshold,
                    left=enc(node.left),
                    right=enc(node.right),
                )
            return out

        return {"size": self.size, "leaves": self.leaf_count, "root": enc(self.root)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __repr__(self):
        return f"RegressionTree(size={self.size}, leaves={self.leaf_count}, sigma={self.sigma})"


def grow(X: np.ndarray, y: np.ndarray, min_leaf: int = 1) -> RegressionTree:
    """Grow a tree by recursive best splits until no admissible split remains."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if y.shape[0] == 0:
        raise SizeError("cannot grow a tree on an empty sample")
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows, y has {y.shape[0]}")
    if min_leaf < 1:
        raise SizeError("min_leaf must be >= 1")

    feature, threshold, left, right = [], [], [], []
    value, node_sse, n_samples, samples = [], [], [], []

    def new_node(idx):
        yi = y[idx]
        mu = yi.mean()
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(mu)
        node_sse.append(float(((yi - mu) ** 2).sum()))
        n_samples.append(len(idx))
        samples.append(idx)
        return len(value) - 1

    # tasks are (parent, side, sample positions); popping left before right
    # creates nodes in preorder
    stack = [(-1, 0, np.arange(len(y)))]
    while stack:
        parent, side, idx = stack.pop()
        i = new_node(idx)
        if parent >= 0:
            (left if side == 0 else right)[parent] = i
        yi = y[idx]
        if len(idx) < 2 * min_leaf or yi.max() == yi.min():
            continue
        split = best_split(X[idx], yi, min_leaf)
        if split is None:
            continue
        mask = X[idx, split.feature] <= split.threshold
        feature[i], threshold[i] = split.feature, split.threshold
        stack.append((i, 1, idx[~mask]))
        stack.append((i, 0, idx[mask]))

    return RegressionTree(
        _finalise(
            np.array(feature, dtype=np.int64),
            np.array(threshold),
            np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64),
            np.array(value),
            np.array(node_sse),
            np.array(n_samples, dtype=np.int64),
            samples,
            min_leaf,
            X.shape[1],
        )
    )


def _finalise(feature, threshold, left, right, value, node_sse, n_samples, samples, min_leaf, d):
    n_nodes = len(feature)
    internal = feature >= 0
    leaves = np.ones(n_nodes, dtype=np.int64)
    sub_sse = node_sse.copy()
    # children always follow their parent in preorder, so a reverse sweep is bottom-up
    for i in range(n_nodes - 1, -1, -1):
        if internal[i]:
            leaves[i] = leaves[left[i]] + leaves[right[i]]
            sub_sse[i] = sub_sse[left[i]] + sub_sse[right[i]]
    alpha = np.full(n_nodes, np.nan)
    alpha[internal] = np.maximum(node_sse[internal] - sub_sse[internal], 0.0) / (
        leaves[internal] - 1
    )
    anc = np.full(n_nodes, np.inf)
    for i in range(n_nodes):
        if internal[i]:
            a = min(anc[i], alpha[i])
            anc[left[i]] = a
            anc[right[i]] = a
    return _Grown(
        feature, threshold, left, right, value, node_sse, n_samples, samples,
        alpha, anc, sub_sse, min_leaf, d,
    )


def alpha_values(tree: RegressionTree) -> dict[int, float]:
    """Per-internal-node alpha: SSE increase from collapsing, per leaf removed.

    Keys are node indices in preorder of the grown tree; leaves have no entry.
    """
    g = tree._g
    nodes = tree.nodes()
    internal = nodes[~tree._acts_leaf[nodes]]
    return {int(i): float(g.alpha[i]) for i in internal}


@dataclass(frozen=True)
class PruneSequence:
    sigmas: tuple[float, ...]
    trees: tuple[RegressionTree, ...]
    alphas: dict

    @property
    def entries(self) -> list[tuple[float, RegressionTree]]:
        return list(zip(self.sigmas, self.trees))

    @property
    def sizes(self) -> list[int]:
        return [t.size for t in self.trees]

    def __len__(self):
        return len(self.trees)


def prune_sequence(tree: RegressionTree) -> PruneSequence:
    """Nested pruned trees, one per distinct alpha level, largest first.

    At level ``sigma`` every node with alpha <= sigma is collapsed to a leaf.
    Levels producing an already-seen size are dropped.
    """
    g = tree._g
    alphas = alpha_values(tree)
    levels = [tree.sigma] + sorted(set(a for a in alphas.values() if a > tree.sigma))
    sigmas, trees, seen = [], [], set()
    for s in levels:
        t = RegressionTree(g, s)
        if t.size in seen:
            continue
        seen.add(t.size)
        sigmas.append(s)
        trees.append(t)
    return PruneSequence(tuple(sigmas), tuple(trees), alphas)


def select_by_size(seq: PruneSequence, t: int) -> RegressionTree:
    """Largest tree in the sequence with at most ``t`` nodes."""
    if t < 1:
        raise SizeError("size bound t must be >= 1")
    best = seq.trees[-1]
    for tree in seq.trees:
        if tree.size <= t and tree.size > best.size:
            best = tree
    return best


def predict(tree: RegressionTree, x) -> float:
    """Prediction for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != tree.n_features:
        raise ShapeError(f"expected a vector of {tree.n_features} features, got shape {x.shape}")
    return float(tree.predict(x[None, :])[0])
