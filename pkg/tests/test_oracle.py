from itertools import product

import numpy as np
import pytest

from eafjsp.encoding import Problem
from eafjsp.instance import Instance, MarketSeries, Operation, benchmark_path, load_instance, synth_market
from eafjsp.oracle import (
    BudgetExceeded,
    ReferenceSet,
    TinyInstanceLimit,
    epsilon_grid,
    estimate_schedules,
    exact_front,
    fingerprint,
    tiny_instance,
)
from eafjsp.pareto import dominates, nondominated, weakly_dominates


def brute_force(inst, market):
    """All (machine, start) assignments checked directly, no pruning."""
    ops = inst.operations
    H = inst.horizon
    price = np.asarray(market.extended(H).price)
    emis = np.asarray(market.extended(H).emission)
    choices = [[(m, s, s + tau) for m, tau in op.eligible for s in range(H - tau + 1)] for op in ops]
    points = []
    for combo in product(*choices):
        ok = True
        for k, op in enumerate(ops):
            if op.op_index > 1 and combo[k][1] < combo[k - 1][2]:
                ok = False
                break
        if not ok:
            continue
        for a in range(len(ops)):
            for b in range(a + 1, len(ops)):
                ma, sa, ea = combo[a]
                mb, sb, eb = combo[b]
                if ma == mb and sa < eb and sb < ea:
                    ok = False
        if not ok:
            continue
        load = np.zeros(H)
        p = e = 0.0
        for k, (m, s, t) in enumerate(combo):
            load[s:t] += ops[k].worker_demand
            p += ops[k].energy_demand * price[s:t].sum()
            e += ops[k].energy_demand * emis[s:t].sum()
        points.append((max(c[2] for c in combo), p, e, load.max()))
    return nondominated(np.array(points))


def test_single_operation():
    inst = Instance(((Operation(0, 1, ((0, 2),)),),), n_machines=1, horizon=2)
    ref = exact_front(inst, MarketSeries([1, 1], [1, 1]))
    assert ref.points.tolist() == [[2.0, 2.0, 2.0, 1.0]]
    assert ref.gap_max == 0.0


def test_two_jobs_price_drop():
    ops = (
        (Operation(0, 1, ((0, 1), (1, 1)), worker_demand=1),),
        (Operation(1, 1, ((0, 1), (1, 1)), worker_demand=2),),
    )
    inst = Instance(ops, n_machines=2, horizon=2)
    ref = exact_front(inst, MarketSeries([3, 1], [1, 1]))
    pts = {tuple(p) for p in ref.points.tolist()}
    assert (1.0, 6.0, 2.0, 3.0) in pts  # both at t=0, three workers
    assert (2.0, 4.0, 2.0, 2.0) in pts  # one job waits for the cheap step
    assert (2.0, 2.0, 2.0, 3.0) in pts  # both wait
    assert len(pts) == 3


@pytest.mark.parametrize("seed", range(12))
def test_matches_brute_force(seed):
    inst, market = tiny_instance(seed, max_operations=4, max_horizon=9)
    ref = exact_front(inst, market)
    np.testing.assert_allclose(ref.points, brute_force(inst, market), rtol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_front_properties_and_decoder_completeness(seed):
    inst, market = tiny_instance(seed)
    ref = exact_front(inst, market)
    pts = ref.points
    assert not any(dominates(a, b) for a in pts for b in pts)
    assert np.array_equal(exact_front(inst, market).points, pts)
    problem = Problem(inst, market)
    rng = np.random.default_rng(seed)
    for _ in range(300):
        obj = np.array(problem.objectives(problem.random_genotype(rng)))
        if obj[0] <= inst.horizon:
            assert any(weakly_dominates(r, obj + 1e-9) for r in pts)


def test_budget_refusal():
    inst = load_instance(benchmark_path("mk01"))
    with pytest.raises(BudgetExceeded) as err:
        exact_front(inst, synth_market(inst.horizon, 0))
    assert err.value.estimate > 0
    inst, market = tiny_instance(0)
    with pytest.raises(BudgetExceeded):
        exact_front(inst, market, TinyInstanceLimit(budget=1))


def test_estimate_counts_chains():
    # one job of one op, tau 2, horizon 5: starts 0..3
    inst = Instance(((Operation(0, 1, ((0, 2),)),),), n_machines=1, horizon=5)
    assert estimate_schedules(inst) == 4


def test_tiny_instances_are_tiny():
    limit = TinyInstanceLimit()
    for seed in range(30):
        inst, market = tiny_instance(seed)
        limit.check(inst)
        assert len(market) == inst.horizon


def test_reference_set_json():
    inst, market = tiny_instance(1)
    ref = exact_front(inst, market)
    again = ReferenceSet.from_json(ref.to_json())
    assert np.array_equal(again.points, ref.points)
    assert again.fingerprint == fingerprint(inst, market)
    other = synth_market(inst.horizon, 99)
    assert fingerprint(inst, other) != ref.fingerprint


def test_grid_has_192_cells():
    for seed in range(5):
        inst, market = tiny_instance(seed)
        grid = epsilon_grid(exact_front(inst, market))
        assert len(grid) == 192
        for cell in grid.cells:
            if cell.feasible:
                point = np.array(cell.point)
                idx = [("c_max", "p_sum", "e_sum", "w_max").index(n) for n in cell.constrained]
                assert np.all(point[idx] <= np.array(cell.bounds) + 1e-12)


def test_grid_single_point():
    grid = epsilon_grid([[3.0, 4.0, 5.0, 2.0]])
    assert len(grid) == 192
    assert all(cell.point == (3.0, 4.0, 5.0, 2.0) for cell in grid.cells)


def test_grid_two_points_hand_walk():
    a = (2.0, 10.0, 5.0, 3.0)
    b = (4.0, 6.0, 7.0, 1.0)
    grid = epsilon_grid([a, b])
    # levels run from min to max in three equal steps
    np.testing.assert_allclose(grid.levels["c_max"], [2, 2 + 2 / 3, 2 + 4 / 3, 4])
    cells = {(c.minimized, c.levels): c.point for c in grid.cells}
    # minimize p_sum with everything loose: b is cheaper
    assert cells[("p_sum", (3, 3, 3))] == b
    # makespan capped at its lowest level: only a fits
    assert cells[("p_sum", (0, 3, 3))] == a
    # minimize e_sum: a emits less
    assert cells[("e_sum", (3, 3, 3))] == a
    # w_max is constrained by its lowest level when minimizing e_sum: only b fits
    assert cells[("e_sum", (3, 3, 0))] == b
    # c_max at level 0 and w_max at level 0 exclude both
    assert cells[("e_sum", (0, 3, 0))] is None
    assert grid.n_feasible == sum(p is not None for p in cells.values())
    assert grid.distinct_points().tolist() == [list(a), list(b)]


def test_grid_rejects_empty():
    with pytest.raises(ValueError):
        epsilon_grid(np.zeros((0, 4)))
