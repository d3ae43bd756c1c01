import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gddc.errors import ArityUnsupported
from gddc.metrics import (PhvTracker, dominates, hypervolume, nondominated_mask, normalize,
                          pareto_filter, write_trace_csv)


def brute_front(points):
    pts = [tuple(p) for p in points]
    out = []
    for i, p in enumerate(pts):
        if p in pts[:i]:
            continue
        if not any(dominates(q, p) for q in pts):
            out.append(p)
    return out


def monte_carlo_hv(front, ref, n, rng):
    lo = front.min(axis=0)
    box = np.prod(ref - lo)
    u = lo + rng.random((n, front.shape[1])) * (ref - lo)
    hit = np.zeros(n, dtype=bool)
    for p in front:
        hit |= np.all(u >= p, axis=1)
    frac = hit.mean()
    return box * frac, box * np.sqrt(frac * (1 - frac) / n)


def test_dominates_examples():
    assert dominates((1, 1, 1), (2, 2, 2))
    assert not dominates((1, 2), (1, 2))
    assert not dominates((1, 3), (2, 2)) and not dominates((2, 2), (1, 3))


def test_pareto_filter_examples():
    assert pareto_filter([]) == []
    assert pareto_filter([(1, 2)]) == [(1, 2)]
    assert [tuple(p) for p in pareto_filter([(1, 2), (2, 1), (2, 2)])] == [(1, 2), (2, 1)]
    assert [tuple(p) for p in pareto_filter([(1, 2), (1, 2), (3, 0)])] == [(1, 2), (3, 0)]


points = st.lists(st.tuples(*[st.integers(0, 6)] * 3), min_size=0, max_size=25)


@given(points)
def test_pareto_filter_matches_brute_force(pts):
    assert [tuple(p) for p in pareto_filter(pts)] == brute_front(pts)


@given(points, st.randoms())
def test_pareto_filter_idempotent_and_order_insensitive(pts, rnd):
    once = [tuple(p) for p in pareto_filter(pts)]
    assert [tuple(p) for p in pareto_filter(once)] == once
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert sorted(tuple(p) for p in pareto_filter(shuffled)) == sorted(once)


@given(st.lists(st.tuples(*[st.integers(0, 5)] * 2), max_size=20))
def test_nondominated_mask_2d(pts):
    arr = np.array(pts, dtype=float).reshape(-1, 2)
    mask = nondominated_mask(arr)
    assert [tuple(p) for p in arr[mask]] == [tuple(map(float, p)) for p in brute_front(pts)]


def test_hypervolume_examples():
    assert hypervolume([(0.5, 0.5)], (1, 1)) == pytest.approx(0.25)
    assert hypervolume([(0.2, 0.8), (0.8, 0.2)], (1, 1)) == pytest.approx(0.28)
    assert hypervolume([(0.25,) * 3, (0.5,) * 3], (1, 1, 1)) == pytest.approx(0.421875)
    assert hypervolume([(0.3,), (0.6,)], (1.0,)) == pytest.approx(0.7)
    assert hypervolume([], (1, 1)) == 0.0


def test_points_outside_reference_are_clipped():
    assert hypervolume([(0.5, 0.5), (1.2, 0.1), (0.1, 1.0)], (1, 1)) == pytest.approx(0.25)


def test_arity_unsupported():
    with pytest.raises(ArityUnsupported):
        hypervolume([(0.1, 0.2, 0.3, 0.4)], (1, 1, 1, 1))


def test_hypervolume_matches_monte_carlo():
    rng = np.random.default_rng(0)
    ref = np.ones(3)
    for _ in range(10):
        front = rng.random((int(rng.integers(1, 31)), 3))
        est, se = monte_carlo_hv(front, ref, 200_000, rng)
        assert abs(hypervolume(front, ref) - est) <= 3 * se + 1e-12


@given(st.lists(st.tuples(*[st.floats(0, 1)] * 3), min_size=1, max_size=15),
       st.tuples(*[st.floats(0, 1)] * 3))
def test_hypervolume_monotone(pts, extra):
    ref = (1.1, 1.1, 1.1)
    assert hypervolume(pts + [extra], ref) >= hypervolume(pts, ref) - 1e-12


@given(st.lists(st.tuples(*[st.floats(0, 1)] * 2), min_size=1, max_size=15))
def test_hypervolume_2d_inclusion_exclusion(pts):
    # a 3-D front with a constant third coordinate reduces to the 2-D volume
    hv2 = hypervolume(pts, (1, 1))
    hv3 = hypervolume([p + (0.0,) for p in pts], (1, 1, 1))
    assert hv3 == pytest.approx(hv2, abs=1e-12)


def test_normalize_degenerate_axis():
    out = normalize([[1.0, 5.0], [3.0, 5.0]], np.array([1.0, 5.0]), np.array([3.0, 5.0]))
    assert out.tolist() == [[0.0, 0.0], [1.0, 0.0]]


def test_tracker_dominated_point_leaves_phv_unchanged():
    t = PhvTracker(2)
    t.feed((0.2, 0.2))
    t.sample(0.0, 1)
    t.feed((0.5, 0.5))
    t.sample(1.0, 2)
    s = t.series(np.zeros(2), np.ones(2))
    assert s[0].phv == s[1].phv


def test_tracker_series_monotone_and_deterministic():
    rng = np.random.default_rng(1)
    pts = rng.random((300, 3))
    runs = []
    for _ in range(2):
        t = PhvTracker(3)
        for i, p in enumerate(pts):
            t.feed(p, i)
            if i % 10 == 9:
                t.sample(i * 0.01, i + 1)
        runs.append(t)
    a = runs[0].series(np.zeros(3), np.ones(3))
    b = runs[1].series(np.zeros(3), np.ones(3))
    assert [s.phv for s in a] == [s.phv for s in b]
    assert all(x.phv <= y.phv for x, y in zip(a, a[1:]))
    final = runs[0].front()
    assert len(pareto_filter(final)) == len(final)
    np.testing.assert_array_equal(final, np.array(pareto_filter(pts)))
    assert sorted(runs[0].front_payloads()) == sorted(
        i for i, p in enumerate(pts) if any(np.array_equal(p, q) for q in final))


def test_trace_csv(tmp_path):
    t = PhvTracker(2)
    t.feed((0.1, 0.9))
    t.sample(0.25, 10)
    write_trace_csv(t.series(np.zeros(2), np.ones(2)), tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "elapsed_s,evaluations,phv"
    assert lines[1].startswith("0.250000,10,")
