"""Exact Pareto fronts of tiny instances by exhaustive enumeration, and the epsilon grid."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import product
from math import comb, prod

import numpy as np

from . import _kernels
from .encoding import Problem
from .instance import Instance, MarketSeries, Operation, instance_to_dict, synth_market, EnrichmentConfig

OBJECTIVES = ("c_max", "p_sum", "e_sum", "w_max")


class BudgetExceeded(RuntimeError):
    def __init__(self, estimate: int, budget: int):
        super().__init__(f"enumeration needs up to {estimate} schedules, budget is {budget}")
        self.estimate = estimate
        self.budget = budget


@dataclass(frozen=True)
class TinyInstanceLimit:
    max_operations: int = 6
    max_horizon: int = 15
    max_machines: int = 3
    budget: int = 50_000_000

    def check(self, inst: Instance) -> int:
        if inst.n_operations > self.max_operations:
            raise BudgetExceeded(estimate_schedules(inst), self.budget)
        if inst.horizon > self.max_horizon or inst.n_machines > self.max_machines:
            raise BudgetExceeded(estimate_schedules(inst), self.budget)
        estimate = estimate_schedules(inst)
        if estimate > self.budget:
            raise BudgetExceeded(estimate, self.budget)
        return estimate


def estimate_schedules(inst: Instance) -> int:
    """Upper bound on enumerated schedules: product over jobs of their machine/start chains.

    Machine conflicts between jobs are ignored, so the true count is lower.
    """
    total = 1
    horizon = inst.horizon
    for job in inst.jobs:
        count = 0
        for route in product(*(op.eligible for op in job)):
            slack = horizon - sum(tau for _, tau in route)
            if slack >= 0:
                count += comb(slack + len(route), len(route))
        total *= count
    return total


def fingerprint(inst: Instance, market: MarketSeries) -> str:
    payload = json.dumps(
        {
            "instance": instance_to_dict(inst),
            "price": [float(x) for x in market.price],
            "emission": [float(x) for x in market.emission],
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    points: np.ndarray
    gaps: np.ndarray
    fingerprint: str = ""
    schedules_visited: int = 0

    @property
    def gap_max(self) -> float | None:
        return float(self.gaps.max()) if len(self.gaps) else None

    def __len__(self) -> int:
        return len(self.points)

    def to_json(self) -> str:
        return json.dumps(
            {
                "points": self.points.tolist(),
                "gaps": self.gaps.tolist(),
                "fingerprint": self.fingerprint,
                "schedules_visited": self.schedules_visited,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ReferenceSet":
        data = json.loads(text)
        return cls(
            points=np.array(data["points"], dtype=float).reshape(-1, 4),
            gaps=np.array(data["gaps"], dtype=float),
            fingerprint=data.get("fingerprint", ""),
            schedules_visited=data.get("schedules_visited", 0),
        )


def exact_front(inst: Instance, market: MarketSeries, limit: TinyInstanceLimit | None = None,
                capacity: int = 100_000) -> ReferenceSet:
    """Every Pareto-optimal objective vector over all feasible schedules in the horizon.

    Raises :class:`BudgetExceeded` before enumerating when the instance is
    outside ``limit``.
    """
    limit = limit or TinyInstanceLimit()
    limit.check(inst)
    problem = Problem(inst, market)
    a = inst.arrays
    points, visited = _kernels.enumerate_front(
        a.job_of, a.pos_of, a.n_eligible, a.elig_machine, a.elig_time, a.workers, a.energy,
        problem.price, problem.emission, inst.horizon, capacity,
    )
    if visited < 0:
        raise BudgetExceeded(capacity, capacity)
    order = np.lexsort(points.T[::-1])
    points = points[order]
    return ReferenceSet(points, np.zeros(len(points)), fingerprint(inst, market), int(visited))


# ---------------------------------------------------------------------------
# epsilon grid


@dataclass(frozen=True)
class GridCell:
    minimized: str
    levels: tuple[int, int, int]
    bounds: tuple[float, float, float]
    constrained: tuple[str, str, str]
    point: tuple[float, ...] | None

    @property
    def feasible(self) -> bool:
        return self.point is not None


@dataclass(frozen=True)
class EpsilonGrid:
    cells: list[GridCell] = field(default_factory=list)
    levels: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def n_feasible(self) -> int:
        return sum(cell.feasible for cell in self.cells)

    def distinct_points(self) -> np.ndarray:
        pts = {cell.point for cell in self.cells if cell.point is not None}
        return np.array(sorted(pts), dtype=float).reshape(-1, 4)


def epsilon_levels(values, n_levels: int = 4) -> np.ndarray:
    """Equally spaced levels from the minimum to the maximum, both inclusive."""
    values = np.asarray(values, dtype=float)
    return np.linspace(values.min(), values.max(), n_levels)


def epsilon_grid(front, n_levels: int = 4) -> EpsilonGrid:
    """Epsilon-constraint bookkeeping over a known front.

    For each of the three non-makespan objectives as the minimized one, the
    makespan and the other two objectives are each bounded by
    ``n_levels`` equally spaced values, giving ``3 * n_levels**3`` cells.
    A cell holds the feasible point with the smallest minimized objective
    (ties broken by the full vector), or ``None`` when no point fits.
    """
    points = np.asarray(front.points if isinstance(front, ReferenceSet) else front, dtype=float)
    if points.size == 0:
        raise ValueError("epsilon_grid needs a non-empty front")
    points = points.reshape(-1, 4)
    levels = {name: epsilon_levels(points[:, k], n_levels) for k, name in enumerate(OBJECTIVES)}
    cells = []
    for minimized in (1, 2, 3):
        others = [k for k in (1, 2, 3) if k != minimized]
        constrained = (0, *others)
        for idx in product(range(n_levels), repeat=3):
            eps = [levels[OBJECTIVES[k]][i] for k, i in zip(constrained, idx)]
            ok = np.ones(len(points), dtype=bool)
            for k, e in zip(constrained, eps):
                ok &= points[:, k] <= e
            point = None
            if ok.any():
                cand = points[ok]
                order = np.lexsort(tuple(cand[:, k] for k in (3, 2, 1, 0)) + (cand[:, minimized],))
                point = tuple(float(v) for v in cand[order[0]])
            cells.append(
                GridCell(
                    minimized=OBJECTIVES[minimized],
                    levels=tuple(idx),
                    bounds=tuple(float(e) for e in eps),
                    constrained=tuple(OBJECTIVES[k] for k in constrained),
                    point=point,
                )
            )
    return EpsilonGrid(cells, levels)


# ---------------------------------------------------------------------------
# tiny instances


def tiny_instance(seed: int, max_operations: int = 6, max_machines: int = 3,
                  max_horizon: int = 15) -> tuple[Instance, MarketSeries]:
    """Random instance small enough for :func:`exact_front`, with a synthetic market.

    Worker demands follow the benchmark formula; energy demands are drawn
    from [1, 5].
    """
    rng = np.random.default_rng([seed, 7])
    while True:
        n_machines = int(rng.integers(2, max_machines + 1))
        n_jobs = int(rng.integers(2, 4))
        lengths = rng.integers(1, 3, size=n_jobs)
        if lengths.sum() > max_operations:
            continue
        jobs = []
        for i, length in enumerate(lengths):
            ops = []
            for j in range(1, int(length) + 1):
                k = int(rng.integers(1, min(2, n_machines) + 1))
                machines = sorted(rng.choice(n_machines, size=k, replace=False).tolist())
                eligible = tuple((m, int(rng.integers(1, 4))) for m in machines)
                ops.append(
                    Operation(
                        job_id=i, op_index=j, eligible=eligible,
                        energy_demand=round(float(rng.uniform(1, 5)), 2),
                        worker_demand=j % ((i + 1) % 4 + 1) + 1,
                    )
                )
            jobs.append(tuple(ops))
        horizon = sum(op.max_time for job in jobs for op in job)
        if horizon > max_horizon:
            continue
        inst = Instance(tuple(jobs), n_machines, horizon, name=f"tiny{seed}")
        if estimate_schedules(inst) > TinyInstanceLimit().budget:
            continue
        config = EnrichmentConfig(seed=seed, block_length=2)
        return inst, synth_market(horizon, seed, config)


def state_count(inst: Instance) -> int:
    """Total (machine, start) choices per operation multiplied together: a loose bound."""
    return prod(sum(inst.horizon - tau + 1 for _, tau in op.eligible) for op in inst.operations)
