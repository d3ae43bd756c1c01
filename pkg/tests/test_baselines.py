import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gddc.baselines import (BaselineParams, CrowdingArchive, crowding_distance, metropolis_accept,
                            nondominated_ranks, run_dmgc, run_gald, run_too, tchebycheff)
from gddc.metrics import dominates
from gddc.search import Budget
from gddc.shield import ShieldParams, run_shield

RUNNERS = {"too": run_too, "gald": run_gald, "dmgc": run_dmgc}


def test_tchebycheff_examples():
    assert tchebycheff((0.4, 0.6), (0.5, 0.5), (0, 0), (1, 1)) == pytest.approx(0.3)
    for w in ((1, 0), (0.2, 0.8), (0.5, 0.5)):
        assert tchebycheff((3, 4), w, (3, 4), (9, 9)) == 0.0


def test_crowding_examples():
    assert np.all(np.isinf(crowding_distance([(0, 1), (1, 0)])))
    d = crowding_distance([(0, 2), (1, 1), (2, 0)])
    assert np.isinf(d[0]) and np.isinf(d[2]) and d[1] == pytest.approx(2.0)
    d = crowding_distance([(1, 1)] * 4)
    assert np.isinf(d[0]) and np.all(d[1:-1] == 0)


def test_crowding_single_point():
    assert np.isinf(crowding_distance([(0.3, 0.2, 0.1)])).all()


def test_metropolis_limits():
    rng = np.random.default_rng(0)
    assert all(metropolis_accept(-1e-9, t, rng) for t in (0.0, 1e-12, 5.0))
    assert not any(metropolis_accept(1e-6, 0.0, rng) for _ in range(100))
    assert not any(metropolis_accept(1.0, 1e-6, rng) for _ in range(100))
    hits = sum(metropolis_accept(1.0, 1.0, rng) for _ in range(20000)) / 20000
    assert hits == pytest.approx(math.exp(-1), abs=0.02)


def test_ranks_single_objective_are_fitness_order():
    vals = np.array([[3.0], [1.0], [2.0], [1.0]])
    np.testing.assert_array_equal(nondominated_ranks(vals), [2, 0, 1, 0])


@given(st.lists(st.tuples(*[st.integers(0, 5)] * 2), min_size=1, max_size=20))
def test_ranks_front_zero_is_nondominated(pts):
    arr = np.array(pts, dtype=float)
    ranks = nondominated_ranks(arr)
    assert np.all(ranks >= 0)
    for i, p in enumerate(arr):
        dominated = any(dominates(q, p) for q in arr)
        assert (ranks[i] == 0) == (not dominated)
        for j, q in enumerate(arr):
            if dominates(q, p):
                assert ranks[j] < ranks[i]


@given(st.lists(st.tuples(*[st.floats(0, 1)] * 3), min_size=1, max_size=60), st.integers(1, 10))
def test_archive_bounded_and_nondominated(pts, cap):
    arch = CrowdingArchive(cap)
    for i, p in enumerate(pts):
        arch.add(i, p)
        assert len(arch) <= cap
    F = arch.F
    assert all(not dominates(p, q) for p in F for q in F)


def test_params_validation():
    with pytest.raises(ValueError):
        BaselineParams(alpha=1.0)
    with pytest.raises(ValueError):
        BaselineParams(crossover_prob=1.5)
    with pytest.raises(ValueError):
        BaselineParams(tournament_size=0)


@pytest.mark.parametrize("name", sorted(RUNNERS))
def test_runs_are_deterministic(small, name):
    a = RUNNERS[name](small, 4, Budget(generations=5), seed=2)
    b = RUNNERS[name](small, 4, Budget(generations=5), seed=2)
    np.testing.assert_array_equal(a.front, b.front)
    assert [e for _, e in a.tracker.samples] == [e for _, e in b.tracker.samples]


@pytest.mark.parametrize("name", sorted(RUNNERS))
def test_fronts_mutually_nondominated(small, name):
    r = RUNNERS[name](small, 8, Budget(generations=6), seed=0)
    F = r.front
    assert len(F) >= 1
    assert all(not dominates(p, q) for p in F for q in F)
    for a, _ in r.front_solutions():
        assert r.tracker is not None
        assert np.all(a.rates >= 0)


def test_gald_population_constant(small):
    r = run_gald(small, 1, Budget(generations=7), seed=0)
    assert r.extra["population_sizes"] == [30] * 7


def test_dmgc_archive_bounded(small):
    r = run_dmgc(small, 1, Budget(generations=7), BaselineParams(archive_capacity=12), seed=0)
    assert max(r.extra["archive_sizes"]) <= 12
    assert len(r.extra["archive"]) <= 12


def test_too_cools_geometrically(small):
    p = BaselineParams(steps_per_temperature=2)
    a = run_too(small, 1, Budget(generations=1), p, seed=0)
    b = run_too(small, 1, Budget(generations=4), p, seed=0)
    assert b.extra["temperature"] == pytest.approx(a.extra["temperature"] * p.alpha ** 3)


def test_equal_evaluations_per_budget(small):
    budget = Budget(evaluations=2500)
    counts = {name: fn(small, 2, budget, seed=1).evaluations for name, fn in RUNNERS.items()}
    counts["shield"] = run_shield(small, 2, budget, ShieldParams(iter_early=2), seed=1).evaluations
    assert set(counts.values()) == {2500}


def test_shared_sampling_cadence(small):
    budget = Budget(evaluations=2000)
    runs = [fn(small, 2, budget, seed=0) for fn in RUNNERS.values()]
    runs.append(run_shield(small, 2, budget, ShieldParams(iter_early=2), seed=0))
    cadences = {tuple(e for _, e in r.tracker.samples) for r in runs}
    assert len(cadences) == 1


def test_single_objective_runs(small):
    for fn in RUNNERS.values():
        r = fn(small, 0, Budget(generations=3), seed=0, objectives="cost")
        assert r.front.shape == (1, 1)
