"""Benchmark protocol: realisations x subsample x (method, V, alpha) cells."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..data import Dataset, make_realisations, standardize, subsample
from ..errors import ConfigError
from ..learners import make_learner
from ..metrics import LOSSES, paired_t_test
from ..seeding import derive_seed
from ..selection import HyperGrid, SubsampleEvaluation, build_grid
from .config import ExperimentConfig
from .datasets import resolve_dataset
from .synthetic import SyntheticSpec, generate_synthetic

SIGNIFICANCE = 0.1


def verdict(mean_method: float, mean_ref: float, p: float) -> str:
    if p >= SIGNIFICANCE:
        return "draw"
    return "win" if mean_method < mean_ref else "loss"


@dataclass
class CellResult:
    dataset: str
    learner: str
    m: int
    method: str
    V: int
    alpha: float
    errors: tuple
    t_stat: float
    p_value: float
    verdict: str
    degenerate: bool = False

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def std(self) -> float:
        return float(np.std(self.errors, ddof=1)) if len(self.errors) > 1 else 0.0

    @property
    def key(self) -> tuple:
        return (self.dataset, self.method, self.V, self.alpha)


@dataclass
class ExperimentReport:
    config: dict
    cells: list
    selections: list = field(default_factory=list)

    def cell(self, dataset: str, method: str, V: int, alpha: float) -> CellResult:
        for c in self.cells:
            if c.key == (dataset, method, V, alpha):
                return c
        raise KeyError((dataset, method, V, alpha))

    @property
    def datasets(self) -> list[str]:
        return list(dict.fromkeys(c.dataset for c in self.cells))

    def win_table(self) -> list[dict]:
        """Loss/draw/win counts across datasets for each (method, V, alpha)."""
        rows: dict[tuple, dict] = {}
        for c in self.cells:
            k = (c.learner, c.m, c.method, c.V, c.alpha)
            row = rows.setdefault(
                k,
                {"learner": c.learner, "m": c.m, "method": c.method, "V": c.V, "alpha": c.alpha,
                 "losses": 0, "draws": 0, "wins": 0},
            )
            row[{"loss": "losses", "draw": "draws", "win": "wins"}[c.verdict]] += 1
        return list(rows.values())

    def __eq__(self, other):
        if not isinstance(other, ExperimentReport):
            return NotImplemented
        return self.config == other.config and self.cells == other.cells


def dataset_key(entry) -> str:
    return entry if isinstance(entry, str) else entry["name"]


@lru_cache(maxsize=8)
def _load(entry_key: str, data_dir: str | None) -> tuple[Dataset, float]:
    import json

    entry = json.loads(entry_key)
    if isinstance(entry, str):
        return resolve_dataset(entry, data_dir)
    entry = dict(entry)
    name = entry.pop("name")
    lf = entry.pop("learn_fraction", 0.5)
    return generate_synthetic(SyntheticSpec(**entry), name), lf


def load_entry(entry, data_dir=None) -> tuple[Dataset, float]:
    import json

    return _load(json.dumps(entry, sort_keys=True), data_dir)


def make_grid(cfg: ExperimentConfig) -> HyperGrid:
    return build_grid(cfg.learner, **cfg.grid)


def _learner(cfg: ExperimentConfig):
    if cfg.learner == "cart":
        return make_learner("cart", min_leaf=cfg.min_leaf)
    return make_learner("svr", tol=cfg.svr_tol)


def _cells(cfg: ExperimentConfig):
    return [(meth, int(V), float(a)) for meth in cfg.methods for V in cfg.V for a in cfg.alpha]


def realisation_evaluation(cfg: ExperimentConfig, entry, r: int) -> SubsampleEvaluation:
    """Evaluation object for realisation ``r`` of one dataset entry."""
    name = dataset_key(entry)
    raw, lf = load_entry(entry, cfg.data_dir)
    base = standardize(raw) if cfg.standardize == "full" else raw
    reals = make_realisations(base, cfg.realisations, lf, derive_seed(cfg.seed, "dataset", name))
    real = reals[r]
    if cfg.m > len(real.train_indices):
        raise ConfigError(
            f"m={cfg.m} exceeds the learn size {len(real.train_indices)} of {name!r}"
        )
    ds = base if cfg.standardize == "full" else standardize(raw, rows=real.train_indices)
    sub = subsample(real, cfg.m, derive_seed(cfg.seed, name, r, "subsample", cfg.m))
    return SubsampleEvaluation(
        _learner(cfg),
        make_grid(cfg),
        ds,
        sub,
        derive_seed(cfg.seed, name, r, "folds", cfg.m),
        LOSSES[cfg.loss],
        real.test_indices,
        cfg.v_sweep,
    )


def _run_realisation(args) -> list[dict]:
    cfg_dict, entry, r = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    ev = realisation_evaluation(cfg, entry, r)
    methods = list(dict.fromkeys(["vfcv", *cfg.methods]))
    out, memo = [], {}
    for meth in methods:
        for V in cfg.V:
            for a in cfg.alpha:
                a = float(a)
                # only PenVF depends on the multiplier
                mk = (meth, int(V), a if meth == "penvf" else None)
                if mk not in memo:
                    res = ev.select(meth, int(V), a if meth == "penvf" else 1.0)
                    memo[mk] = {
                        "index": res.index,
                        "matched": res.matched,
                        "test_mae": res.test_mae,
                        "flags": res.flags,
                    }
                out.append({"dataset": dataset_key(entry), "realisation": r, "method": meth,
                            "V": int(V), "alpha": a, **memo[mk]})
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every (dataset, realisation) and aggregate per (method, V, alpha) cell."""
    cfg.validate()
    cfg_dict = cfg.to_dict()
    jobs = [(cfg_dict, entry, r) for entry in cfg.datasets for r in range(cfg.realisations)]
    if cfg.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            records = list(pool.map(_run_realisation, jobs))
    else:
        records = [_run_realisation(j) for j in jobs]
    flat = [rec for batch in records for rec in batch]

    errors: dict[tuple, list] = {}
    for rec in flat:
        errors.setdefault((rec["dataset"], rec["method"], rec["V"], rec["alpha"]), []).append(
            rec["test_mae"]
        )
    cells = []
    for entry in cfg.datasets:
        name = dataset_key(entry)
        for meth, V, a in _cells(cfg):
            errs = errors[(name, meth, V, a)]
            ref = errors[(name, "vfcv", V, a)]
            if len(errs) >= 2:
                tt = paired_t_test(errs, ref)
            else:
                tt = paired_t_test([0.0, 0.0], [0.0, 0.0])
            cells.append(
                CellResult(
                    name, cfg.learner, cfg.m, meth, V, a, tuple(float(e) for e in errs),
                    float(tt.t), float(tt.p),
                    verdict(float(np.mean(errs)), float(np.mean(ref)), tt.p), tt.degenerate,
                )
            )
    requested = set(cfg.methods)
    selections = [rec for rec in flat if rec["method"] in requested]
    return ExperimentReport(cfg_dict, cells, selections)


@dataclass
class GapTrace:
    """Per-realisation penalties on the grid, for penalty-versus-size plots."""

    dataset: str
    V: int
    alpha: float
    points: list
    rows: list  # dicts, realisation-major then grid order

    def mean_by_point(self) -> list[dict]:
        out = []
        for g, q in enumerate(self.points):
            sel = [r for r in self.rows if r["index"] == g]
            out.append(
                {
                    "index": g,
                    "point": q,
                    **{
                        k: float(np.mean([r[k] for r in sel]))
                        for k in ("pen_ideal", "pen_vf", "pen_vf_plus", "gap_vf", "gap_vf_plus", "beta")
                    },
                    "abs_gap_vf": float(np.mean([abs(r["gap_vf"]) for r in sel])),
                    "abs_gap_vf_plus": float(np.mean([abs(r["gap_vf_plus"]) for r in sel])),
                }
            )
        return out


def penalty_gap_trace(
    cfg: ExperimentConfig, V: int | None = None, alpha: float = 1.0, indices=None
) -> GapTrace:
    """Ideal, V-fold and learning-rate-corrected penalties per grid point.

    Uses the first dataset of ``cfg``; ``indices`` restricts the grid points.
    """
    entry = cfg.datasets[0]
    V = int(V if V is not None else cfg.V[0])
    grid = make_grid(cfg)
    idx = list(range(len(grid))) if indices is None else list(indices)
    rows = []
    for r in range(cfg.realisations):
        ev = realisation_evaluation(cfg, entry, r)
        ideal = ev.penalty("ideal", V)
        vf = ev.penalty("penvf", V, alpha)
        vfp = ev.penalty("penvf+", V)
        betas = ev.betas()
        for g in idx:
            rows.append(
                {
                    "realisation": r,
                    "index": g,
                    "pen_ideal": float(ideal[g]),
                    "pen_vf": float(vf[g]),
                    "pen_vf_plus": float(vfp[g]),
                    "gap_vf": float(vf[g] - ideal[g]),
                    "gap_vf_plus": float(vfp[g] - ideal[g]),
                    "beta": float(betas[g]),
                }
            )
    points = [grid.describe(g) for g in idx]
    # re-key rows on position within the selected points
    pos = {g: k for k, g in enumerate(idx)}
    for row in rows:
        row["index"] = pos[row["index"]]
    return GapTrace(dataset_key(entry), V, alpha, points, rows)


def is_finite_trace(trace: GapTrace) -> bool:
    return all(math.isfinite(v) for r in trace.rows for k, v in r.items() if isinstance(v, float))
