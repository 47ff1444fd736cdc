import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eafjsp.pareto import dominates, nondominated_sort, ranks
from eafjsp.selection import (
    NormalizationState,
    das_dennis,
    directions_for,
    hype_fitness,
    hype_select,
    lattice_size,
    nsga3_select,
    partitions_for,
    projections,
    select,
    theta_clusters,
    theta_dominates,
    theta_ranks,
    theta_select,
)
from reference_impls import exact_hype, naive_fronts


def test_sort_examples():
    assert nondominated_sort([(1, 1, 1, 1), (2, 2, 2, 2)]) == [[0], [1]]
    assert nondominated_sort([(1, 2, 3, 4), (4, 3, 2, 1)]) == [[0, 1]]
    assert nondominated_sort([]) == []


@pytest.mark.parametrize("seed", range(100))
def test_sort_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    objs = rng.integers(0, 6, size=(200, 4)).astype(float) if seed % 2 else rng.random((200, 4))
    assert nondominated_sort(objs) == naive_fronts(objs)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 30), st.just(4)), elements=st.integers(0, 5).map(float)))
def test_sort_partition_properties(objs):
    fronts = nondominated_sort(objs)
    assert sorted(i for f in fronts for i in f) == list(range(len(objs)))
    for k, front in enumerate(fronts):
        for i in front:
            assert not any(dominates(objs[j], objs[i]) for j in front)
            if k:
                assert any(dominates(objs[j], objs[i]) for j in fronts[k - 1])


def test_das_dennis_counts():
    axes = das_dennis(4, 1)
    assert sorted(map(tuple, axes)) == sorted(map(tuple, np.eye(4)))
    assert len(das_dennis(4, 12)) == 455
    two = das_dennis(4, 13, 11)
    assert len(two) == 560 + 364 == lattice_size(4, 13, 11)
    assert np.allclose(two.sum(axis=1), 1.0, atol=1e-12)
    assert len(np.unique(np.round(two, 12), axis=0)) == len(two)
    with pytest.raises(ValueError):
        das_dennis(4, 0)


def test_direction_count_rule():
    assert partitions_for(1000) == (13, 11)
    assert len(directions_for(1000)) == 924
    assert len(directions_for(100)) == 76
    assert len(directions_for(50)) == 45
    assert len(directions_for(10)) <= 10


def test_normalization_front_in_unit_box():
    rng = np.random.default_rng(0)
    objs = rng.random((60, 4)) * [10, 100, 1, 5]
    front = nondominated_sort(objs)[0]
    fn = NormalizationState.fit(objs, front).apply(objs[front])
    assert fn.min() >= 0
    assert fn.max() <= 1 + 1e-9


def test_normalization_drops_constant_dimension():
    objs = np.array([[1.0, 3, 2, 2], [2.0, 3, 1, 2], [3.0, 3, 3, 2]])
    state = NormalizationState.fit(objs, [0, 1])
    assert state.active.tolist() == [True, False, True, False]
    assert np.all(state.apply(objs)[:, [1, 3]] == 0)


def _niching_case():
    front0 = [
        (1, 0, 0, 0), (0.8, 0.2, 0, 0), (0.7, 0, 0.3, 0),  # axis 0
        (0, 1, 0, 0), (0.2, 0.8, 0, 0), (0, 0.7, 0, 0.3),  # axis 1
        (0, 0, 1, 0), (0, 0.1, 0.9, 0),  # axis 2
        (0, 0, 0, 1),  # axis 3
    ]
    front1 = [
        (0, 0, 0.2, 1.4),  # axis 3, d2 0.2
        (0.1, 0, 1.5, 0),  # axis 2, d2 0.1
        (1.5, 0.1, 0, 0), (1.4, 0.2, 0, 0), (1.35, 0, 0.25, 0), (1.3, 0, 0, 0.3), (1.25, 0.35, 0, 0),
        (1.2, 0, 0.4, 0), (1.15, 0, 0, 0.45), (1.1, 0.5, 0, 0), (1.2, 0.2, 0.2, 0),
    ]
    return np.array(front0 + front1, dtype=float)


def test_nsga3_hand_trace():
    objs = _niching_case()
    assert [len(f) for f in nondominated_sort(objs)] == [9, 11]
    # niche counts after front 0: [3, 3, 2, 1]
    # axis 3 (count 1) takes index 9; axis 2 (count 2) takes 10;
    # only axis 0 has members left: its two closest, 11 then 12
    survivors = nsga3_select(objs, 13, das_dennis(4, 1), np.random.default_rng(0))
    assert survivors.tolist() == list(range(13))


def test_nsga3_degenerate_sizes():
    objs = _niching_case()
    rng = np.random.default_rng(0)
    assert nsga3_select(objs, 9, das_dennis(4, 1), rng).tolist() == list(range(9))
    assert nsga3_select(objs, 25, das_dennis(4, 1), rng).tolist() == list(range(20))


def test_theta_geometry():
    d1, d2 = projections(np.array([[0.6, 0.8]]), np.array([[1.0, 0.0]]))
    assert abs(d1[0, 0] - 0.6) < 1e-12
    assert abs(d2[0, 0] - 0.8) < 1e-12
    clusters = theta_clusters(np.array([[0.6, 0.8]]), np.array([[1.0, 0.0]]), theta=5.0)
    assert abs(clusters.fitness[0] - 4.6) < 1e-12


def test_theta_dominance_definition():
    fn = np.array([[0.3, 0.0], [0.5, 0.0], [0.0, 0.1]])
    clusters = theta_clusters(fn, np.eye(2), theta=5.0)
    assert theta_dominates(0, 1, clusters)
    assert not theta_dominates(1, 0, clusters)
    # different clusters never compare, whatever the fitness
    assert not theta_dominates(2, 1, clusters)
    assert not theta_dominates(1, 2, clusters)
    assert theta_ranks(clusters).tolist() == [0, 1, 0]


@settings(max_examples=100, deadline=None)
@given(
    arrays(float, 4, elements=st.floats(0.01, 1.0)),
    st.floats(0.1, 10.0),
)
def test_theta_cluster_scale_invariance(point, scale):
    dirs = das_dennis(4, 3)
    a = theta_clusters(point[None, :], dirs, 5.0).cluster[0]
    b = theta_clusters(point[None, :] * scale, dirs, 5.0).cluster[0]
    da = projections(point[None, :], dirs)[1][0]
    # exact ties between directions may resolve either way after scaling
    if np.sort(da)[1] - np.sort(da)[0] > 1e-9:
        assert a == b


def test_theta_select_fills_by_theta_fronts():
    objs = _niching_case()
    survivors = theta_select(objs, 13, das_dennis(4, 1), 5.0, np.random.default_rng(0))
    assert len(survivors) == 13
    assert set(range(9)) <= set(survivors.tolist())
    # the best member of each occupied cluster on the cut front is in theta-front 0
    assert {9, 10, 11} <= set(survivors.tolist())


def test_hype_corner_point():
    fit = hype_fitness([[0, 0, 0, 0]], 1, np.zeros(4), np.ones(4), 100_000, np.random.default_rng(0))
    assert fit.fitness[0] == pytest.approx(1.0, abs=1e-12)
    fit = hype_fitness([[0.5, 0.5, 0.5, 0.5]], 1, np.zeros(4), np.ones(4), 100_000, np.random.default_rng(0))
    sigma = np.sqrt(0.0625 * 0.9375 / 100_000)
    assert abs(fit.fitness[0] - 0.0625) < 3 * sigma


def test_hype_duplicates_share_equally():
    fit = hype_fitness([[0.2, 0.4], [0.2, 0.4], [0.6, 0.1]], 1, np.zeros(2), np.ones(2), 50_000, np.random.default_rng(1))
    assert fit.fitness[0] == fit.fitness[1]


def test_hype_degenerate_box():
    fit = hype_fitness([[0.2, 0.4]], 1, np.zeros(2), np.array([1.0, 0.0]), 10, np.random.default_rng(1))
    assert fit.degenerate and fit.volume == 0 and fit.fitness.tolist() == [0.0]


@pytest.mark.parametrize("k", [1, 2, 3])
def test_hype_matches_exact_on_three_points(k):
    points = np.array([[0.2, 0.8], [0.5, 0.5], [0.8, 0.2]])
    lower, upper = np.zeros(2), np.ones(2)
    exact = exact_hype(points, k, lower, upper)
    est = hype_fitness(points, k, lower, upper, 1_000_000, np.random.default_rng(k)).fitness
    np.testing.assert_allclose(est, exact, rtol=0.02)


def test_hype_exact_oracle_hand_values():
    points = np.array([[0.2, 0.8], [0.5, 0.5], [0.8, 0.2]])
    np.testing.assert_allclose(exact_hype(points, 1, np.zeros(2), np.ones(2)), [0.06, 0.09, 0.06])


def test_hype_select_removes_smallest_contribution():
    objs = np.array([[0.1, 0.9], [0.45, 0.5], [0.55, 0.45], [0.9, 0.1]])
    lower = objs.min(axis=0)
    upper = objs.max(axis=0) * 1.1
    contrib = exact_hype(objs, 1, lower, upper)
    survivors = hype_select(objs, 3, 200_000, np.random.default_rng(0))
    removed = set(range(4)) - set(survivors.tolist())
    assert removed == {int(np.argmin(contrib))}


def test_hype_select_is_seeded():
    rng = np.random.default_rng(3)
    objs = rng.random((40, 4))
    a = hype_select(objs, 20, 500, np.random.default_rng(7))
    b = hype_select(objs, 20, 500, np.random.default_rng(7))
    assert a.tolist() == b.tolist()
    assert hype_select(objs, 50, 10, rng).tolist() == list(range(40))


@pytest.mark.parametrize("strategy", ["nsga3", "theta_dea", "hype"])
@pytest.mark.parametrize("seed", range(5))
def test_selection_size_and_elitism(strategy, seed):
    rng = np.random.default_rng(seed)
    objs = rng.integers(0, 8, size=(60, 4)).astype(float)
    keep = select(strategy, objs, 30, np.random.default_rng(seed), dirs=directions_for(30), n_samples=200)
    assert len(keep) == len(set(keep.tolist())) == 30
    kept = set(keep.tolist())
    r = ranks(objs)
    for i in kept:
        for j in range(len(objs)):
            if dominates(objs[j], objs[i]):
                assert j in kept
    assert max(r[list(kept)]) <= min(r[[i for i in range(60) if i not in kept]])


def test_unknown_strategy():
    with pytest.raises(ValueError):
        select("spea2", np.zeros((4, 4)), 2, np.random.default_rng(0))
