"""Small hand-built instances used in tests, docs, and the ``gantt --example`` command."""

from __future__ import annotations

from .encoding import Genotype
from .instance import Instance, MarketSeries, Operation


def figure2() -> tuple[Instance, MarketSeries, Genotype]:
    """Three jobs whose operations need ``i`` workers each (job ``i``, 1-based).

    Operation (1,1) goes to machine 2 with caps of 1 on price and 4 on
    emissions and lands at t=0. Job 3 waits for low emissions and overlaps
    job 2 at t=2, where the worker load peaks at 2 + 3 = 5.
    """
    jobs = (
        (
            Operation(0, 1, ((0, 3), (1, 2)), energy_demand=1.0, worker_demand=1),
            Operation(0, 2, ((1, 2),), energy_demand=1.0, worker_demand=1),
        ),
        (Operation(1, 1, ((0, 3),), energy_demand=2.0, worker_demand=2),),
        (Operation(2, 1, ((2, 2),), energy_demand=1.5, worker_demand=3),),
    )
    inst = Instance(jobs, n_machines=3, horizon=10, name="figure2")
    market = MarketSeries(
        price=[1, 1, 2, 2, 3, 1, 1, 2, 3, 2],
        emission=[4, 3, 1, 1, 2, 4, 4, 3, 5, 3],
    )
    # operations in global order: (1,1), (1,2), (2,1), (3,1)
    genotype = Genotype(
        sequence=[0, 1, 2, 0],
        machine_choice=[1, 0, 0, 0],
        max_cost=[1.0, 1.0, 3.0, 2.0],
        max_emission=[4.0, 4.0, 4.0, 1.0],
    )
    return inst, market, genotype


def two_by_two(energy: tuple[float, ...] = (1.0, 2.0, 1.5, 0.5)) -> Instance:
    """Two jobs of two operations, each operation eligible on both machines."""
    taus = (((0, 1), (1, 2)), ((0, 2), (1, 1)), ((0, 1), (1, 1)), ((0, 2), (1, 2)))
    ops = [
        Operation(k // 2, k % 2 + 1, taus[k], energy_demand=energy[k], worker_demand=(k % 2 + 1) % ((k // 2 + 1) % 4 + 1) + 1)
        for k in range(4)
    ]
    jobs = (tuple(ops[:2]), tuple(ops[2:]))
    horizon = sum(op.max_time for op in ops)
    return Instance(jobs, n_machines=2, horizon=horizon, name="toy2x2")
