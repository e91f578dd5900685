"""Seeded synthetic regression problems used when benchmark files are absent."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from sklearn.datasets import make_friedman1, make_friedman2, make_friedman3

from ..data import Dataset
from ..errors import ConfigError
from ..seeding import rng_for

KINDS = ("sine", "linear_hetero", "friedman1", "friedman2", "friedman3", "abalone_like", "step")


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str
    n: int
    d: int = 1
    noise: float = 0.3
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _sine(rng, n, d, noise):
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = np.sin(2 * np.pi * X[:, 0])
    if noise:
        y = y + noise * rng.standard_normal(n)
    return X, y


def _linear_hetero(rng, n, d, noise):
    X = rng.standard_normal((n, d))
    w = 1.0 / np.arange(1, d + 1)
    scale = 1.0 + np.abs(X[:, 0])
    return X, X @ w + noise * scale * rng.standard_normal(n)


def _abalone_like(rng, n, d, noise):
    # correlated size measurements driven by a latent age; integer "ring" target
    if d < 2:
        raise ConfigError("abalone_like needs d >= 2")
    age = rng.gamma(4.0, 0.25, size=n)
    size = 1.0 - np.exp(-1.2 * age)
    cols = [np.digitize(size + 0.15 * rng.standard_normal(n), [0.45, 0.65]).astype(float)]
    for k in range(1, d):
        power = 1.0 + (k % 3)
        cols.append(size**power * (1.0 + 0.08 * rng.standard_normal(n)))
    X = np.column_stack(cols)
    rings = 2.0 + 9.0 * age + noise * (1.0 + age) * rng.standard_normal(n) * 2.0
    return X, np.maximum(np.round(rings), 1.0)


def _step(rng, n, d, noise):
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = np.floor(4 * X[:, 0]) + 2.0 * (X[:, 1 % d] > 0.5)
    return X, y + noise * rng.standard_normal(n)


def generate_synthetic(spec: SyntheticSpec, name: str | None = None) -> Dataset:
    if spec.n < 4:
        raise ConfigError("synthetic datasets need n >= 4")
    if spec.d < 1 or spec.noise < 0:
        raise ConfigError(f"invalid synthetic spec {spec}")
    rng = rng_for(spec.seed)
    state = int(rng.integers(0, 2**31 - 1))
    if spec.kind == "sine":
        X, y = _sine(rng, spec.n, spec.d, spec.noise)
    elif spec.kind == "linear_hetero":
        X, y = _linear_hetero(rng, spec.n, spec.d, spec.noise)
    elif spec.kind == "friedman1":
        X, y = make_friedman1(spec.n, max(spec.d, 5), noise=spec.noise, random_state=state)
    elif spec.kind == "friedman2":
        X, y = make_friedman2(spec.n, noise=spec.noise, random_state=state)
    elif spec.kind == "friedman3":
        X, y = make_friedman3(spec.n, noise=spec.noise, random_state=state)
    elif spec.kind == "abalone_like":
        X, y = _abalone_like(rng, spec.n, spec.d, spec.noise)
    elif spec.kind == "step":
        X, y = _step(rng, spec.n, spec.d, spec.noise)
    else:
        raise ConfigError(f"unknown synthetic kind {spec.kind!r}; choose from {KINDS}")
    return Dataset(name or f"synth-{spec.kind}", X, y)
