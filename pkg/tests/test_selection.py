import json
import math

import numpy as np
import pytest

from penvf.bench.datasets import resolve_dataset
from penvf.data import Dataset, make_realisations, standardize, subsample
from penvf.errors import ConfigError, SelectionError
from penvf.learners import CartLearner, SvrLearner, round_half_up
from penvf.penalty import FoldTable
from penvf.selection import (
    CART_SIZES,
    HyperGrid,
    SubsampleEvaluation,
    argmin_first,
    build_grid,
    match_complexity_cart,
    match_complexity_svr,
    nearest_norm_index,
    select,
)
from penvf.svr import SvrModel, SvrParams


def test_default_grids():
    g = build_grid("svr")
    assert len(g) == 12 * 7 * 2 == 168
    assert g.points[0] == SvrParams(2.0**-10, 2.0**-10, 2.0**-4)
    assert g.points[1] == SvrParams(2.0**-10, 2.0**-10, 2.0**-3)
    assert g.points[2] == SvrParams(2.0**-10, 2.0**-8, 2.0**-4)
    assert g.points[-1] == SvrParams(2.0**12, 2.0**2, 2.0**-3)
    c = build_grid("cart")
    assert list(c.points) == [1, 2, 3, 5, 7, 10, 15, 22, 31, 44, 63, 90, 127]
    assert list(CART_SIZES) == [round_half_up(2 ** (k / 2) - 1) for k in range(2, 15)]


def test_grid_overrides():
    assert len(build_grid("svr", C=[1.0])) == 14
    assert len(build_grid("cart", sizes=[3, 7])) == 2
    with pytest.raises(ConfigError):
        build_grid("svr", C=[])
    with pytest.raises(ConfigError):
        build_grid("svr", gamma=[-1.0])
    with pytest.raises(ConfigError):
        build_grid("tree")


def test_argmin_first():
    assert argmin_first(np.array([3.0, 1.0, 1.0, 2.0])) == 1
    assert argmin_first(np.array([np.inf, 2.0])) == 1
    with pytest.raises(SelectionError):
        argmin_first(np.array([np.inf, np.inf]))


def test_round_half_up_matching():
    assert round_half_up(6.4) == 6
    assert round_half_up(6.5) == 7
    assert round_half_up(2.5) == 3
    rng = np.random.default_rng(0)
    from penvf.cart import grow, prune_sequence

    seq = prune_sequence(grow(rng.normal(size=(50, 2)), rng.normal(size=50)))
    tree, t_hat = match_complexity_cart([1, 1, 1], seq)
    assert t_hat == 1 and tree.size == 1
    tree, t_hat = match_complexity_cart([6, 7], seq)
    assert t_hat == 7 and tree.size == max(s for s in seq.sizes if s <= 7)


def test_nearest_norm_rules():
    assert nearest_norm_index([0.5, 1.0, 2.0], [1, 2, 4], 1.1) == 1
    assert nearest_norm_index([0.5, 1.0, 2.0], [1, 2, 4], 2.0) == 2
    assert nearest_norm_index([0.9, 1.3], [1, 2], 1.1) == 0
    assert nearest_norm_index([1.3, 0.9], [2, 1], 1.1) == 1
    assert nearest_norm_index([float("nan"), 3.0], [1, 2], 0.0) == 1


def _model(norm, C, gamma=1.0, eps=0.1, converged=True):
    return SvrModel(np.zeros((0, 1)), np.zeros(0), 0.0, gamma, norm, SvrParams(C, gamma, eps),
                    converged=converged)


def test_match_complexity_svr_filters_and_falls_back():
    pt = SvrParams(2.0, 1.0, 0.1)
    cands = [
        (SvrParams(1.0, 1.0, 0.1), _model(0.5, 1.0)),
        (SvrParams(2.0, 1.0, 0.1), _model(1.0, 2.0)),
        (SvrParams(4.0, 1.0, 0.1), _model(1.2, 4.0, converged=False)),
        (SvrParams(4.0, 2.0, 0.1), _model(1.2, 4.0, gamma=2.0)),
    ]
    m, target, flags = match_complexity_svr([1.1, 1.3], pt, cands)
    assert target == pytest.approx(1.2) and m.params.C == 2.0 and flags == []
    bad = [(q, _model(1.0, q.C, converged=False)) for q, _ in cands[:3]]
    m, _, flags = match_complexity_svr([1.0], pt, bad)
    assert flags == ["no_converged_refit"] and m.params.C == 2.0
    with pytest.raises(SelectionError):
        match_complexity_svr([1.0], pt, [(pt, RuntimeError("x"))])


@pytest.fixture(scope="module")
def sine_setup():
    ds, lf = resolve_dataset("synth-sine")
    ds = standardize(ds)
    reals = make_realisations(ds, 3, lf, 11)
    return ds, reals


def _eval(ds, real, learner, grid, m=60, seed=0, v_sweep=range(2, 7)):
    sub = subsample(real, m, seed)
    return SubsampleEvaluation(learner, grid, ds, sub, seed, test_indices=real.test_indices,
                               v_sweep=v_sweep)


def test_singleton_grid_selects_the_point(sine_setup):
    ds, reals = sine_setup
    ev = _eval(ds, reals[0], CartLearner(), HyperGrid("cart", (7,)))
    for meth in ("vfcv", "penvf", "penvf+", "ideal"):
        assert ev.select(meth, 3, 1.2).index == 0


def test_criteria_and_argmin_certificates(sine_setup):
    ds, reals = sine_setup
    ev = _eval(ds, reals[1], CartLearner(), build_grid("cart"))
    for meth in ("vfcv", "penvf", "penvf+", "ideal"):
        res = ev.select(meth, 4, 1.0)
        assert res.index == argmin_first(res.criteria)
        assert np.all(res.criteria[res.index] <= res.criteria)
    ideal = ev.criterion("ideal", 4)
    np.testing.assert_array_equal(ideal, ev.test_losses)
    vf = ev.criterion("vfcv", 4)
    np.testing.assert_allclose(vf, ev.table(4).vfcv())
    pen = ev.criterion("penvf", 4, 1.4) - ev.empirical
    np.testing.assert_allclose(pen, 3 * 1.4 / 4 * ev.table(4).pen_sum(), rtol=1e-12)


def test_penvf_plus_uses_learning_rate_constant(sine_setup):
    ds, reals = sine_setup
    ev = _eval(ds, reals[0], CartLearner(), build_grid("cart"))
    betas = ev.betas()
    assert np.all((0 <= betas) & (betas <= 1))
    pen = ev.penalty("penvf+", 5)
    want = [(4**b) * (5 ** (1 - b)) / 5 * s for b, s in zip(betas, ev.table(5).pen_sum())]
    np.testing.assert_allclose(pen, want, rtol=1e-12)


def test_equal_penalties_reduce_to_empirical_argmin(sine_setup):
    ds, reals = sine_setup
    ev = _eval(ds, reals[0], CartLearner(), build_grid("cart"))
    t = ev.table(4)
    G = len(ev.grid)
    ev._tables[4] = FoldTable(4, t.heldout, np.zeros((G, 4)), np.full((G, 4), 0.3),
                              t.complexity, t.fold_sizes)
    want = argmin_first(ev.empirical)
    for alpha in (0.6, 1.0, 1.6):
        assert ev.select("penvf", 4, alpha).index == want


def test_cart_selection_matches_history(sine_setup):
    ds, reals = sine_setup
    ev = _eval(ds, reals[2], CartLearner(), build_grid("cart"))
    res = ev.select("vfcv", 5)
    sizes = ev.table(5).complexity[res.index]
    assert res.matched["t_hat"] == round_half_up(float(np.mean(sizes)))
    assert res.final_model.size <= res.matched["t_hat"]
    assert res.test_mae == pytest.approx(
        np.mean(np.abs(res.final_model.predict(ds.features[reals[2].test_indices])
                       - ds.targets[reals[2].test_indices]))
    )
    doc = json.loads(res.to_json(ev.grid))
    assert doc["point"] == {"t": int(res.point)} and doc["method"] == "vfcv"


def test_svr_selection_norm_bookkeeping(sine_setup):
    ds, reals = sine_setup
    grid = build_grid("svr", C=[0.25, 1.0, 4.0], gamma=[0.5, 2.0], epsilon=[0.0625])
    ev = _eval(ds, reals[0], SvrLearner(), grid, m=40, v_sweep=(2, 3, 4))
    for meth in ("vfcv", "penvf", "penvf+"):
        res = ev.select(meth, 3, 1.0)
        norms = ev.table(3).complexity[res.index]
        assert abs(res.matched["w_star"] - float(np.mean(norms))) <= 1e-12
        assert res.final_model.params.gamma == res.point.gamma
        assert res.final_model.params.epsilon == res.point.epsilon


def test_determinism_of_criteria(sine_setup):
    ds, reals = sine_setup
    a = _eval(ds, reals[0], CartLearner(), build_grid("cart")).criterion("penvf+", 3)
    b = _eval(ds, reals[0], CartLearner(), build_grid("cart")).criterion("penvf+", 3)
    np.testing.assert_array_equal(a, b)


class FlakyLearner(CartLearner):
    """CART that fails at one grid point."""

    def models_for(self, path, points):
        out = super().models_for(path, points)
        return [RuntimeError("boom") if p == 5 else mdl for p, mdl in zip(points, out)]


def test_failed_points_are_invalid(sine_setup):
    ds, reals = sine_setup
    ev = _eval(ds, reals[0], FlakyLearner(), HyperGrid("cart", (1, 5, 15)))
    crit = ev.criterion("vfcv", 3)
    assert math.isinf(crit[1]) and np.isfinite(crit[[0, 2]]).all()
    assert 1 in ev.table(3).errors


def test_select_wrapper_errors(sine_setup):
    ds, reals = sine_setup
    sub = subsample(reals[0], 30, 1)
    with pytest.raises(ConfigError):
        select("cv", CartLearner(), build_grid("cart"), ds, sub, 2)
    with pytest.raises(ConfigError):
        select("ideal", CartLearner(), build_grid("cart"), ds, sub, 2)
    res = select("vfcv", CartLearner(), build_grid("cart"), ds, sub, 2)
    assert res.test_mae is None


def test_ideal_beats_vfcv_on_average():
    ds, lf = resolve_dataset("synth-sine")
    ds = standardize(ds)
    reals = make_realisations(ds, 50, lf, 99)
    grid = build_grid("cart")
    ideal, vf = [], []
    for r, real in enumerate(reals):
        ev = SubsampleEvaluation(CartLearner(), grid, ds, subsample(real, 100, r), r,
                                 test_indices=real.test_indices, v_sweep=(2, 3))
        ideal.append(ev.select("ideal", 5).test_mae)
        vf.append(ev.select("vfcv", 5).test_mae)
    assert np.mean(ideal) <= np.mean(vf)


def test_tiny_dataset_runs():
    rng = np.random.default_rng(0)
    ds = Dataset("tiny", rng.normal(size=(12, 1)), rng.normal(size=12))
    (real,) = make_realisations(ds, 1, 0.5, 0)
    ev = SubsampleEvaluation(CartLearner(), build_grid("cart"), ds, subsample(real, 6, 0), 0,
                             test_indices=real.test_indices, v_sweep=(2, 3))
    assert ev.select("penvf+", 2).final_model.size >= 1
