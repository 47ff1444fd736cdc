"""Memetic evolutionary loop: variation operators, local refinement, generations.

Random streams are split from the master seed with
``SeedSequence(seed, spawn_key=key)``:

* ``(0, k)`` draws the k-th initial individual,
* ``(1, g)`` drives tournaments, crossover and mutation in generation g,
* ``(2, g)`` drives environmental selection in generation g.

Decoding and refinement are deterministic, so they may run on a thread pool
without changing any result.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .encoding import Genotype, ObjectiveVector, Problem
from .instance import Instance, MarketSeries
from .pareto import nondominated, nondominated_sort, ranks
from .selection import STRATEGIES, directions_for, select

REFINEMENT_POLICIES = ("rank0", "all", "none")

PROFILES = {
    "full": {"population_size": 1000, "generations": 700},
    "desk": {"population_size": 100, "generations": 100},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 1000
    generations: int = 700
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    refinement_policy: str = "rank0"
    seed: int = 0
    selection: str = "nsga3"
    theta: float = 5.0
    hype_samples: int | None = None
    workers: int = 1

    def validate(self) -> None:
        if self.population_size < 4 or self.population_size % 2:
            raise ConfigError("population_size must be even and >= 4")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        for name in ("mutation_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.refinement_policy not in REFINEMENT_POLICIES:
            raise ConfigError(f"refinement_policy must be one of {REFINEMENT_POLICIES}")
        if self.selection not in STRATEGIES:
            raise ConfigError(f"selection must be one of {STRATEGIES}")
        if self.theta < 0:
            raise ConfigError("theta must be >= 0")
        if self.hype_samples is not None and self.hype_samples < 1:
            raise ConfigError("hype_samples must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def samples(self) -> int:
        return self.hype_samples or self.population_size

    @classmethod
    def from_profile(cls, profile: str, **overrides) -> "EvolutionConfig":
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}")
        return cls(**{**PROFILES[profile], **overrides})


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ---------------------------------------------------------------------------
# variation


def pox(seq_a: np.ndarray, seq_b: np.ndarray, subset) -> np.ndarray:
    """Precedence-preserving order crossover.

    Genes of jobs in ``subset`` keep their positions from ``seq_a``; the free
    positions take the remaining genes in the order they appear in ``seq_b``.
    """
    seq_a = np.asarray(seq_a)
    seq_b = np.asarray(seq_b)
    keep = np.isin(seq_a, list(subset))
    child = seq_a.copy()
    child[~keep] = seq_b[~np.isin(seq_b, list(subset))]
    return child


def crossover(a: Genotype, b: Genotype, rng: np.random.Generator) -> tuple[Genotype, Genotype]:
    """POX on the sequence, uniform crossover on the per-operation strings."""
    jobs = np.unique(a.sequence)
    subset = jobs[rng.random(len(jobs)) < 0.5]
    seq1 = pox(a.sequence, b.sequence, subset)
    seq2 = pox(b.sequence, a.sequence, subset)
    mask = rng.random(len(a.machine_choice)) < 0.5
    child1 = Genotype(
        seq1,
        np.where(mask, a.machine_choice, b.machine_choice),
        np.where(mask, a.max_cost, b.max_cost),
        np.where(mask, a.max_emission, b.max_emission),
    )
    child2 = Genotype(
        seq2,
        np.where(mask, b.machine_choice, a.machine_choice),
        np.where(mask, b.max_cost, a.max_cost),
        np.where(mask, b.max_emission, a.max_emission),
    )
    return child1, child2


def mutate(g: Genotype, rate: float, rng: np.random.Generator, problem: Problem) -> Genotype:
    """Each gene group mutates with probability ``rate``.

    Sequence: swap two positions holding different jobs. Machines: redraw
    one operation's machine. Cost and emission: redraw one threshold each
    from the market range.
    """
    n = len(g.sequence)
    if n == 0:
        return g
    seq, mach, cost, emis = g.sequence, g.machine_choice, g.max_cost, g.max_emission
    if rng.random() < rate:
        distinct = np.flatnonzero(g.sequence != g.sequence[0])
        if distinct.size:
            i = int(rng.integers(n))
            others = np.flatnonzero(g.sequence != g.sequence[i])
            j = int(others[rng.integers(len(others))])
            seq = seq.copy()
            seq[i], seq[j] = seq[j], seq[i]
    if rng.random() < rate:
        op = int(rng.integers(n))
        mach = mach.copy()
        mach[op] = int(rng.integers(problem.instance.arrays.n_eligible[op]))
    if rng.random() < rate:
        op = int(rng.integers(n))
        cost = cost.copy()
        cost[op] = rng.uniform(*problem.price_range)
    if rng.random() < rate:
        op = int(rng.integers(n))
        emis = emis.copy()
        emis[op] = rng.uniform(*problem.emission_range)
    if seq is g.sequence and mach is g.machine_choice and cost is g.max_cost and emis is g.max_emission:
        return g
    return Genotype(seq, mach, cost, emis)


def refine_energy(g: Genotype, inst: Instance, market: MarketSeries) -> Genotype:
    """Greedy energy-cost refinement; never raises decoded c_max or p_sum."""
    return Problem(inst, market).refine_energy(g)


def refine_workers(g: Genotype, inst: Instance, market: MarketSeries) -> Genotype:
    """Peak-worker refinement; never raises decoded c_max or w_max."""
    return Problem(inst, market).refine_workers(g)


# ---------------------------------------------------------------------------
# the generational loop


@dataclass
class Individual:
    genotype: Genotype
    objectives: ObjectiveVector
    refined: bool = False


@dataclass
class Population:
    individuals: list[Individual]
    generation: int = 0

    def objective_array(self) -> np.ndarray:
        return np.array([ind.objectives for ind in self.individuals], dtype=float).reshape(-1, 4)


@dataclass
class RunResult:
    config: EvolutionConfig
    fronts: list[np.ndarray]
    population: Population
    wall_clock: float = 0.0
    merged_sizes: list[int] = field(default_factory=list)

    @property
    def final_front(self) -> np.ndarray:
        return self.fronts[-1]

    def to_dict(self, include_timing: bool = True) -> dict:
        data = {
            "config": asdict(self.config),
            "fronts": [front.tolist() for front in self.fronts],
            "population": [
                {"genotype": ind.genotype.to_dict(), "objectives": list(ind.objectives)}
                for ind in self.population.individuals
            ],
        }
        if include_timing:
            data["wall_clock"] = self.wall_clock
        return data

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True)

    def front_csv(self) -> str:
        lines = ["c_max,p_sum,e_sum,w_max"]
        lines += [",".join(repr(float(v)) for v in row) for row in self.final_front]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        individuals = [
            Individual(Genotype.from_dict(item["genotype"]), ObjectiveVector(*item["objectives"]))
            for item in data["population"]
        ]
        config = EvolutionConfig(**data["config"])
        return cls(
            config=config,
            fronts=[np.array(f, dtype=float).reshape(-1, 4) for f in data["fronts"]],
            population=Population(individuals, config.generations),
            wall_clock=data.get("wall_clock", 0.0),
        )


class _Pool:
    def __init__(self, workers: int):
        self.executor = ThreadPoolExecutor(workers) if workers > 1 else None

    def map(self, fn, items):
        if self.executor is None:
            return [fn(x) for x in items]
        return list(self.executor.map(fn, items))

    def close(self):
        if self.executor is not None:
            self.executor.shutdown()


def _tournament(rank: np.ndarray, rng: np.random.Generator) -> int:
    i, j = rng.integers(len(rank), size=2)
    if rank[i] != rank[j]:
        return int(i if rank[i] < rank[j] else j)
    return int(i if rng.random() < 0.5 else j)


def _front_of(pop: Population) -> np.ndarray:
    return nondominated(pop.objective_array())


def _refine(problem: Problem, ind: Individual) -> Individual:
    g = problem.refine_workers(problem.refine_energy(ind.genotype))
    if g is ind.genotype:
        return Individual(g, ind.objectives, True)
    return Individual(g, problem.objectives(g), True)


def run(inst: Instance, market: MarketSeries, cfg: EvolutionConfig) -> RunResult:
    """Run the memetic loop and record the non-dominated front of every generation."""
    cfg.validate()
    started = time.perf_counter()
    problem = Problem(inst, market)
    n = cfg.population_size
    dirs = directions_for(n, 4) if cfg.selection in ("nsga3", "theta_dea") else None
    pool = _Pool(cfg.workers)
    try:
        genotypes = [problem.random_genotype(stream(cfg.seed, 0, k)) for k in range(n)]
        objectives = pool.map(problem.objectives, genotypes)
        pop = Population([Individual(g, o) for g, o in zip(genotypes, objectives)], 0)
        fronts = [_front_of(pop)]
        merged_sizes = []
        for gen in range(1, cfg.generations + 1):
            rng = stream(cfg.seed, 1, gen)
            rank = ranks(pop.objective_array())
            children: list[Genotype] = []
            while len(children) < n:
                a = pop.individuals[_tournament(rank, rng)].genotype
                b = pop.individuals[_tournament(rank, rng)].genotype
                if rng.random() < cfg.crossover_rate:
                    a, b = crossover(a, b, rng)
                children.append(mutate(a, cfg.mutation_rate, rng, problem))
                children.append(mutate(b, cfg.mutation_rate, rng, problem))
            child_obj = pool.map(problem.objectives, children)
            merged = pop.individuals + [Individual(g, o) for g, o in zip(children, child_obj)]
            merged_sizes.append(len(merged))

            if cfg.refinement_policy != "none":
                if cfg.refinement_policy == "rank0":
                    targets = nondominated_sort(np.array([m.objectives for m in merged]))[0]
                else:
                    targets = range(len(merged))
                targets = [i for i in targets if not merged[i].refined]
                for i, ind in zip(targets, pool.map(lambda i: _refine(problem, merged[i]), targets)):
                    merged[i] = ind

            objs = np.array([m.objectives for m in merged], dtype=float)
            keep = select(
                cfg.selection, objs, n, stream(cfg.seed, 2, gen),
                dirs=dirs, theta=cfg.theta, n_samples=cfg.samples,
            )
            pop = Population([merged[i] for i in keep], gen)
            fronts.append(_front_of(pop))
    finally:
        pool.close()
    return RunResult(cfg, fronts, pop, time.perf_counter() - started, merged_sizes)


def with_overrides(cfg: EvolutionConfig, **overrides) -> EvolutionConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
