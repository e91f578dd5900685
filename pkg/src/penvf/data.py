"""Datasets, learn/test realisations, subsamples and V-fold partitions."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FoldCountError, ParseError, SizeError
from .seeding import derive_seed, rng_for


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = _frozen(self.features, float)
        y = _frozen(self.targets, float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise SizeError(f"features {X.shape} and targets {y.shape} do not align")
        if X.shape[0] < 2:
            raise SizeError(f"dataset needs at least 2 rows, got {X.shape[0]}")
        if X.shape[1] < 1:
            raise SizeError("dataset needs at least one feature")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ParseError("dataset contains non-finite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.targets, other.targets)
        )


@dataclass(frozen=True, eq=False)
class Realisation:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "train_indices", _frozen(self.train_indices, np.int64))
        object.__setattr__(self, "test_indices", _frozen(self.test_indices, np.int64))
        if len(self.train_indices) == 0 or len(self.test_indices) == 0:
            raise SizeError("train and test index sets must both be non-empty")
        if np.intersect1d(self.train_indices, self.test_indices).size:
            raise SizeError("train and test index sets overlap")

    def __eq__(self, other):
        if not isinstance(other, Realisation):
            return NotImplemented
        return (
            self.seed == other.seed
            and np.array_equal(self.train_indices, other.train_indices)
            and np.array_equal(self.test_indices, other.test_indices)
        )


@dataclass(frozen=True, eq=False)
class Subsample:
    parent: Realisation
    m: int
    indices: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "indices", _frozen(self.indices, np.int64))


@dataclass(frozen=True, eq=False)
class FoldPartition:
    V: int
    blocks: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple(_frozen(b, np.int64) for b in self.blocks)
        )

    def complement(self, j: int) -> np.ndarray:
        """Indices of every block except ``j``, in block order."""
        return np.concatenate([b for i, b in enumerate(self.blocks) if i != j])

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(b) for b in self.blocks])


def load_csv(path: str | Path, name: str | None = None) -> Dataset:
    """Read a numeric CSV with one header row; the last column is the target."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise ParseError(f"{path}: need at least one feature column and a target")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i}, column {j + 1} ({header[j]!r}): non-numeric cell {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise ParseError(
                    f"{path}: row {i}, column {j + 1} ({header[j]!r}): non-finite cell {cell!r}"
                )
            values[i - 2, j] = v
    if values.shape[0] < 2:
        raise SizeError(f"{path}: need at least 2 data rows, got {values.shape[0]}")
    return Dataset(name or path.stem, values[:, :-1], values[:, -1])


def _column_stats(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = a.mean(axis=0)
    sd = a.std(axis=0)  # population convention
    # exactly constant columns can still get a rounding-level sd
    sd[np.ptp(a, axis=0) == 0] = 0.0
    return mean, sd


def _apply(a: np.ndarray, mean, sd) -> np.ndarray:
    out = np.zeros_like(a, dtype=float)
    ok = sd > 0
    out[..., ok] = (a[..., ok] - mean[ok]) / sd[ok]
    return out


def standardize(ds: Dataset, rows: np.ndarray | None = None) -> Dataset:
    """Centre and scale every feature column and the target.

    Statistics come from ``rows`` when given (e.g. a realisation's learn set),
    otherwise from the whole dataset. Constant columns map to zeros.
    """
    X, y = ds.features, ds.targets[:, None]
    ref = slice(None) if rows is None else np.asarray(rows)
    xm, xs = _column_stats(X[ref])
    ym, ys = _column_stats(y[ref])
    return Dataset(ds.name, _apply(X, xm, xs), _apply(y, ym, ys)[:, 0])


def make_realisations(
    ds: Dataset, count: int, learn_fraction: float, seed: int
) -> list[Realisation]:
    if count < 1:
        raise SizeError("count must be at least 1")
    if not 0 < learn_fraction < 1:
        raise SizeError(f"learn_fraction must lie in (0, 1), got {learn_fraction}")
    n_train = int(math.floor(learn_fraction * ds.n + 0.5))
    if n_train < 1 or n_train >= ds.n:
        raise SizeError(
            f"learn_fraction {learn_fraction} gives {n_train} of {ds.n} rows for training"
        )
    out = []
    for r in range(count):
        rseed = derive_seed(seed, "realisation", r)
        perm = rng_for(rseed).permutation(ds.n)
        out.append(Realisation(np.sort(perm[:n_train]), np.sort(perm[n_train:]), rseed))
    return out


def subsample(r: Realisation, m: int, seed: int) -> Subsample:
    if m < 1 or m > len(r.train_indices):
        raise SizeError(f"cannot draw m={m} from {len(r.train_indices)} training rows")
    picked = rng_for(seed).choice(r.train_indices, size=m, replace=False)
    return Subsample(r, m, np.sort(picked), seed)


def partition_folds(s: Subsample, V: int, seed: int) -> FoldPartition:
    """Shuffle the subsample and deal it into ``V`` blocks (sizes differ by <= 1)."""
    if V < 2 or V > s.m:
        raise FoldCountError(f"V={V} invalid for a subsample of size {s.m}")
    perm = rng_for(seed).permutation(s.indices)
    return FoldPartition(V, tuple(np.sort(perm[j::V]) for j in range(V)))


def realisations_to_json(name: str, seed: int, rs: list[Realisation]) -> str:
    return json.dumps(
        {
            "dataset": name,
            "seed": seed,
            "realisations": [
                {
                    "seed": r.seed,
                    "train": r.train_indices.tolist(),
                    "test": r.test_indices.tolist(),
                }
                for r in rs
            ],
        }
    )


def realisations_from_json(text: str) -> tuple[str, int, list[Realisation]]:
    doc = json.loads(text)
    rs = [Realisation(r["train"], r["test"], r["seed"]) for r in doc["realisations"]]
    return doc["dataset"], doc["seed"], rs
