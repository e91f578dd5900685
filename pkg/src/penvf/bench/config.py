"""Experiment configuration (flat JSON key/value)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError
from ..metrics import LOSSES
from ..selection import METHODS

DEFAULT_V = (2, 4, 6, 8, 10, 12)
DEFAULT_ALPHA = (0.6, 0.8, 1.0, 1.2, 1.4, 1.6)
DEFAULT_V_SWEEP = tuple(range(2, 13))


@dataclass
class ExperimentConfig:
    """One experiment: datasets x (method, V, alpha) cells over realisations.

    ``datasets`` entries are registry names or inline synthetic specs
    (``{"name": ..., "kind": ..., "n": ..., "d": ..., "noise": ..., "seed": ...,
    "learn_fraction": ...}``).
    """

    datasets: list = field(default_factory=lambda: ["synth-abalone"])
    learner: str = "cart"
    m: int = 50
    V: list = field(default_factory=lambda: list(DEFAULT_V))
    alpha: list = field(default_factory=lambda: list(DEFAULT_ALPHA))
    methods: list = field(default_factory=lambda: list(METHODS))
    realisations: int = 100
    seed: int = 0
    loss: str = "mae"
    min_leaf: int = 1
    svr_tol: float = 1e-3
    grid: dict = field(default_factory=dict)
    v_sweep: list = field(default_factory=lambda: list(DEFAULT_V_SWEEP))
    standardize: str = "full"
    data_dir: str | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if isinstance(self.datasets, (str, dict)):
            self.datasets = [self.datasets]
        self.validate()

    def validate(self):
        for name in ("datasets", "V", "alpha", "methods", "v_sweep"):
            if not list(getattr(self, name)):
                raise ConfigError(f"config list {name!r} is empty")
        if self.learner not in ("cart", "svr"):
            raise ConfigError(f"learner must be 'cart' or 'svr', got {self.learner!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.m < 2 or any(int(v) < 2 or int(v) > self.m for v in self.V):
            raise ConfigError(f"fold counts {self.V} incompatible with m={self.m}")
        if "penvf+" in self.methods and (
            len(set(self.v_sweep)) < 2 or max(self.v_sweep) > self.m or min(self.v_sweep) < 2
        ):
            raise ConfigError(f"fold-count sweep {self.v_sweep} invalid for m={self.m}")
        if any(a <= 0 for a in self.alpha):
            raise ConfigError("penalty multipliers must be positive")
        if self.realisations < 1:
            raise ConfigError("need at least one realisation")
        if self.standardize not in ("full", "train"):
            raise ConfigError("standardize must be 'full' or 'train'")
        unknown = set(self.grid) - {"C", "gamma", "epsilon", "sizes"}
        if unknown:
            raise ConfigError(f"unknown grid override keys {sorted(unknown)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
