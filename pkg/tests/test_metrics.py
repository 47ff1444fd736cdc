import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eafjsp.metrics import (
    Bounds,
    clipped_count,
    gd_plus,
    hv_trace,
    hypervolume,
    igd_plus,
    normalize,
    spacing,
)
from reference_impls import grid_hypervolume, random_front


def test_single_point_cases():
    assert hypervolume([[0, 0, 0, 0]]) == pytest.approx(1.0, abs=1e-12)
    assert hypervolume([[0.5, 0.5, 0.5, 0.5]]) == pytest.approx(0.0625, abs=1e-12)
    assert hypervolume([[1.0, 0.2, 0.2, 0.2]]) == 0.0
    assert hypervolume([]) == 0.0
    assert clipped_count([[1.2, 0, 0, 0], [0.5, 0.5, 0.5, 0.5]]) == 1


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("seed", range(6))
def test_matches_grid_oracle(d, seed):
    rng = np.random.default_rng(seed)
    pts = random_front(rng, 12, d)
    assert hypervolume(pts) == pytest.approx(grid_hypervolume(pts, np.ones(d)), rel=1e-10, abs=1e-12)


def test_integer_grid_ties():
    rng = np.random.default_rng(4)
    pts = rng.integers(0, 4, size=(25, 4)) / 4
    assert hypervolume(pts) == pytest.approx(grid_hypervolume(pts, np.ones(4)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    arrays(float, st.tuples(st.integers(1, 10), st.just(4)), elements=st.floats(0, 1)),
    arrays(float, 4, elements=st.floats(0, 1)),
)
def test_monotone_and_permutation_invariant(points, extra):
    hv = hypervolume(points)
    assert hypervolume(np.vstack([points, extra])) >= hv - 1e-12
    assert hypervolume(points[::-1]) == pytest.approx(hv, abs=1e-12)
    dominated = np.minimum(points[0] + 0.01, 1.0)
    assert hypervolume(np.vstack([points, dominated])) == pytest.approx(hv, abs=1e-12)


def test_monte_carlo_agreement():
    rng = np.random.default_rng(0)
    samples = rng.random((1_000_000, 4))
    for _ in range(3):
        pts = random_front(rng, 15)
        exact = hypervolume(pts)
        hits = np.zeros(len(samples), dtype=bool)
        for p in pts:
            hits |= np.all(samples >= p, axis=1)
        est = hits.mean()
        sigma = np.sqrt(exact * (1 - exact) / len(samples))
        assert abs(est - exact) <= 3 * sigma


def test_custom_reference_point():
    assert hypervolume([[1, 1]], ref_point=[3, 2]) == pytest.approx(2.0)


def test_igd_plus_examples():
    r = np.array([[0.0, 0, 0, 0]])
    assert igd_plus(r, [[0.1, 0.1, 0.1, 0.1]]) == pytest.approx(0.2, abs=1e-12)
    assert igd_plus(r, np.vstack([r, [[0.5, 0.5, 0.5, 0.5]]])) == 0.0
    # a front point dominating the reference point counts as zero
    assert igd_plus([[0.2, 0.2, 0.2, 0.2]], [[0.1, 0.1, 0.1, 0.1]]) == 0.0
    assert igd_plus([], [[0.1, 0.1, 0.1, 0.1]]) is None


def test_igd_plus_ignores_dominated_reference_points():
    r = np.array([[0.0, 0, 0, 0], [0.5, 0.5, 0.5, 0.5]])
    assert igd_plus(r, [[0.1, 0.1, 0.1, 0.1]]) == pytest.approx(0.2, abs=1e-12)


def test_gd_plus_examples_and_clamp_direction():
    assert gd_plus([[0.0, 0, 0, 0]], [[0.1, 0.1, 0.1, 0.1]]) == 0.0
    assert gd_plus([[0.2, 0, 0, 0]], [[0.0, 0, 0, 0]]) == pytest.approx(0.2, abs=1e-12)
    # swapping roles swaps which side is clamped
    assert igd_plus([[0.2, 0, 0, 0]], [[0.0, 0, 0, 0]]) == 0.0
    assert igd_plus([[0.0, 0, 0, 0]], [[0.2, 0, 0, 0]]) == pytest.approx(0.2, abs=1e-12)
    f = np.array([[0.3, 0.1, 0.2, 0.0], [0.1, 0.4, 0.0, 0.2]])
    assert gd_plus(f, f) == 0.0
    assert gd_plus(f, []) is None


def test_spacing_examples():
    line = np.array([[i, 0, 0, 0] for i in range(5)], dtype=float)
    assert spacing(line) == 0.0
    assert spacing(line[:2]) == 0.0
    assert spacing(line[:1]) is None
    # nearest-neighbour Manhattan distances 1, 1, 1, 3
    pts = np.array([[0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0], [2, 3, 0, 0]], dtype=float)
    # mean 1.5, deviations 0.25*3 + 2.25 = 3, over n-1 = 3 gives 1
    assert spacing(pts) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 8), st.just(4)), elements=st.floats(0, 1)))
def test_metrics_permutation_invariant(points):
    ref = points[::2]
    assert igd_plus(ref, points) == pytest.approx(igd_plus(ref[::-1], points[::-1]), abs=1e-12)
    assert gd_plus(points, ref) == pytest.approx(gd_plus(points[::-1], ref[::-1]), abs=1e-12)
    assert spacing(points) == pytest.approx(spacing(points[::-1]), abs=1e-12)


def test_normalization_maps_union_to_unit_box():
    fronts = [np.array([[1.0, 10, 3, 2], [2, 5, 3, 4]]), np.array([[4.0, 7, 3, 3]])]
    ref = np.array([[0.5, 6, 3, 2]])
    norm = normalize(fronts, ref)
    stacked = np.vstack(norm.fronts + [norm.reference])
    assert stacked.min() == 0 and stacked.max() == 1
    # constant third objective is dropped
    assert norm.dropped == [2]
    assert np.all(stacked[:, 2] == 0)


def test_bounds_need_points():
    with pytest.raises(ValueError):
        Bounds.of(np.zeros((0, 4)))


def test_hv_trace():
    b = Bounds(np.zeros(2), np.ones(2))
    front = np.array([[0.5, 0.5]])
    trace = hv_trace([front, front, front], b)
    assert trace.growth.tolist() == [0.0, 0.0, 0.0]
    grown = hv_trace([front, np.vstack([front, [[0.0, 0.0]]])], b)
    assert grown.hypervolume.tolist() == [0.25, 1.0]
    assert grown.growth[1] == pytest.approx(3.0)
    empty = hv_trace([np.array([[1.0, 1.0]]), front], b)
    assert np.isnan(empty.growth).all()
    with pytest.raises(ValueError):
        hv_trace([], b)
