"""Genotype, threshold-driven decoder, and objective evaluation.

A genotype is four strings over the global operation index: the job
sequence (the k-th occurrence of job i stands for operation (i, k)), the
machine choice into each operation's eligible list, and per-operation caps
on price and emission factor. Decoding places operations in sequence order
at the earliest start where the job predecessor has finished, the machine is
free (append-only per machine), and every step of the window respects both
caps. When no such window fits in the horizon, the operation falls back to
the earliest precedence- and machine-feasible start.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _kernels
from .instance import Instance, MarketSeries


class ObjectiveVector(NamedTuple):
    c_max: float
    p_sum: float
    e_sum: float
    w_max: float


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Genotype:
    sequence: np.ndarray
    machine_choice: np.ndarray
    max_cost: np.ndarray
    max_emission: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "sequence", _frozen(self.sequence, np.int64))
        object.__setattr__(self, "machine_choice", _frozen(self.machine_choice, np.int64))
        object.__setattr__(self, "max_cost", _frozen(self.max_cost, np.float64))
        object.__setattr__(self, "max_emission", _frozen(self.max_emission, np.float64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Genotype):
            return NotImplemented
        return (
            np.array_equal(self.sequence, other.sequence)
            and np.array_equal(self.machine_choice, other.machine_choice)
            and np.array_equal(self.max_cost, other.max_cost)
            and np.array_equal(self.max_emission, other.max_emission)
        )

    __hash__ = None  # type: ignore[assignment]

    def replace(self, **changes) -> "Genotype":
        fields = {
            "sequence": self.sequence,
            "machine_choice": self.machine_choice,
            "max_cost": self.max_cost,
            "max_emission": self.max_emission,
        }
        fields.update(changes)
        return Genotype(**fields)

    def validate(self, inst: Instance) -> None:
        """Raise ``ValueError`` unless this genotype is well-formed for ``inst``."""
        arrays = inst.arrays
        n = inst.n_operations
        if self.sequence.shape != (n,) or self.machine_choice.shape != (n,):
            raise ValueError("gene strings have the wrong length")
        if self.max_cost.shape != (n,) or self.max_emission.shape != (n,):
            raise ValueError("threshold strings have the wrong length")
        counts = np.bincount(self.sequence, minlength=inst.n_jobs) if n else np.zeros(inst.n_jobs)
        if n and (self.sequence.min() < 0 or len(counts) != inst.n_jobs):
            raise ValueError("sequence references an unknown job")
        if not np.array_equal(counts, arrays.job_len):
            raise ValueError("sequence occurrence counts do not match job lengths")
        if np.any(self.machine_choice < 0) or np.any(self.machine_choice >= arrays.n_eligible):
            raise ValueError("machine choice outside the eligible list")
        if np.any(self.max_cost < 0) or np.any(self.max_emission < 0):
            raise ValueError("thresholds must be non-negative")

    def is_valid(self, inst: Instance) -> bool:
        try:
            self.validate(inst)
        except ValueError:
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence.tolist(),
            "machine_choice": self.machine_choice.tolist(),
            "max_cost": self.max_cost.tolist(),
            "max_emission": self.max_emission.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Genotype":
        return cls(data["sequence"], data["machine_choice"], data["max_cost"], data["max_emission"])


@dataclass(frozen=True, eq=False)
class Schedule:
    """Decoded phenotype. Per-operation arrays use the global operation index."""

    instance: Instance
    market: MarketSeries
    machine: np.ndarray
    start: np.ndarray
    end: np.ndarray
    worker_load: np.ndarray
    objectives: ObjectiveVector

    def to_dict(self) -> dict:
        ops = []
        for k, op in enumerate(self.instance.operations):
            ops.append(
                {
                    "job": op.job_id + 1,
                    "operation": op.op_index,
                    "machine": int(self.machine[k]) + 1,
                    "start": int(self.start[k]),
                    "end": int(self.end[k]),
                }
            )
        return {"operations": ops, "objectives": self.objectives._asdict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def gantt_csv(self) -> str:
        """One row per operation followed by one row per time step of worker load."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "job", "operation", "machine", "start", "end", "t", "workers", "price", "emission"])
        for k, op in enumerate(self.instance.operations):
            writer.writerow(
                ["op", op.job_id + 1, op.op_index, int(self.machine[k]) + 1, int(self.start[k]), int(self.end[k]), "", "", "", ""]
            )
        n = len(self.market)
        for t, w in enumerate(self.worker_load):
            writer.writerow(
                ["load", "", "", "", "", "", t, int(w), float(self.market.price[t % n]), float(self.market.emission[t % n])]
            )
        return buf.getvalue()


class Problem:
    """An instance paired with a market series, ready for repeated decoding."""

    def __init__(self, instance: Instance, market: MarketSeries):
        if len(market) < instance.horizon:
            market = market.extended(instance.horizon)
        self.instance = instance
        self.market = market
        length = 2 * max(instance.horizon, 1) + 1
        ext = market.extended(length)
        self.price = ext.price
        self.emission = ext.emission
        window = market.extended(max(instance.horizon, 1))
        self.price_range = (float(window.price.min()), float(window.price.max()))
        self.emission_range = (float(window.emission.min()), float(window.emission.max()))

    @cached_property
    def _args(self):
        a = self.instance.arrays
        return a, self.instance.n_machines, self.instance.horizon

    def decode_arrays(self, g: Genotype):
        a, n_machines, horizon = self._args
        return _kernels.decode(
            g.sequence, g.machine_choice, g.max_cost, g.max_emission,
            a.job_offset, a.elig_machine, a.elig_time, a.workers, a.energy,
            n_machines, self.price, self.emission, horizon,
        )

    def objectives(self, g: Genotype) -> ObjectiveVector:
        obj = self.decode_arrays(g)[4]
        return ObjectiveVector(*(float(x) for x in obj))

    def decode(self, g: Genotype) -> Schedule:
        start, end, machine, _order, obj, load = self.decode_arrays(g)
        return Schedule(
            instance=self.instance,
            market=self.market,
            machine=_frozen(machine, np.int64),
            start=_frozen(start, np.int64),
            end=_frozen(end, np.int64),
            worker_load=_frozen(load, np.int64),
            objectives=ObjectiveVector(*(float(x) for x in obj)),
        )

    def refine_energy(self, g: Genotype) -> Genotype:
        return self._refine(_kernels.refine_energy, g)

    def refine_workers(self, g: Genotype) -> Genotype:
        return self._refine(_kernels.refine_workers, g)

    def _refine(self, kernel, g: Genotype) -> Genotype:
        a, n_machines, horizon = self._args
        cost, emis, accepted = kernel(
            g.sequence, g.machine_choice, g.max_cost, g.max_emission,
            a.job_offset, a.job_of, a.pos_of, a.job_len, a.elig_machine, a.elig_time,
            a.workers, a.energy, n_machines, self.price, self.emission, horizon,
        )
        if accepted == 0:
            return g
        return g.replace(max_cost=cost, max_emission=emis)

    def random_genotype(self, rng: np.random.Generator) -> Genotype:
        a = self.instance.arrays
        n = self.instance.n_operations
        sequence = rng.permutation(np.repeat(np.arange(self.instance.n_jobs), a.job_len))
        machine_choice = (rng.random(n) * a.n_eligible).astype(np.int64)
        max_cost = rng.uniform(*self.price_range, size=n)
        max_emission = rng.uniform(*self.emission_range, size=n)
        return Genotype(sequence, machine_choice, max_cost, max_emission)


def decode(g: Genotype, inst: Instance, market: MarketSeries) -> Schedule:
    return Problem(inst, market).decode(g)


def random_genotype(inst: Instance, market: MarketSeries, rng: np.random.Generator) -> Genotype:
    """Uniform random genotype.

    Thresholds are drawn uniformly between the minimum and maximum of the
    market series over the horizon, so some bind and some do not.
    """
    return Problem(inst, market).random_genotype(rng)


def evaluate(s: Schedule) -> ObjectiveVector:
    """Recompute the objective vector from a schedule's raw start and end times."""
    ops = s.instance.operations
    if not ops:
        return ObjectiveVector(0.0, 0.0, 0.0, 0.0)
    n = len(s.market)
    c_max = int(s.end.max())
    load = np.zeros(max(c_max, s.instance.horizon), dtype=np.int64)
    p_sum = 0.0
    e_sum = 0.0
    for k, op in enumerate(ops):
        steps = np.arange(s.start[k], s.end[k]) % n
        p_sum += op.energy_demand * float(s.market.price[steps].sum())
        e_sum += op.energy_demand * float(s.market.emission[steps].sum())
        load[s.start[k] : s.end[k]] += op.worker_demand
    return ObjectiveVector(float(c_max), p_sum, e_sum, float(load.max()))


def schedule_violations(s: Schedule) -> list[str]:
    """Human-readable list of broken schedule invariants (empty when valid)."""
    problems = []
    inst = s.instance
    arrays = inst.arrays
    ops = inst.operations
    for k, op in enumerate(ops):
        choices = [tau for m, tau in op.eligible if m == s.machine[k]]
        if not choices:
            problems.append(f"op {k}: machine {s.machine[k]} not eligible")
        elif s.end[k] - s.start[k] not in choices:
            problems.append(f"op {k}: duration does not match processing time")
        if s.start[k] < 0:
            problems.append(f"op {k}: negative start")
        if op.op_index > 1 and s.start[k] < s.end[k - 1]:
            problems.append(f"op {k}: starts before its job predecessor ends")
    order = np.lexsort((s.start, s.machine))
    for a, b in zip(order[:-1], order[1:]):
        if s.machine[a] == s.machine[b] and s.start[b] < s.end[a]:
            problems.append(f"ops {a} and {b} overlap on machine {s.machine[a]}")
    expected = np.zeros(len(s.worker_load), dtype=np.int64)
    for k in range(len(ops)):
        expected[s.start[k] : s.end[k]] += arrays.workers[k]
    if not np.array_equal(expected, s.worker_load):
        problems.append("worker load does not match running operations")
    if ops and s.objectives.w_max != s.worker_load.max():
        problems.append("w_max differs from the peak worker load")
    if ops and s.objectives.c_max != s.end.max():
        problems.append("c_max differs from the last end time")
    return problems
