"""Problem instances, market series, and their file formats.

Jobs are indexed from 0 internally; operation positions (``op_index``) and
machine numbers in ``.fjs`` files are 1-based.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed instance files or invalid instance data."""


class MarketError(ValueError):
    """Raised for malformed or out-of-domain market series."""


@dataclass(frozen=True)
class Operation:
    job_id: int
    op_index: int
    eligible: tuple[tuple[int, int], ...]
    energy_demand: float = 1.0
    worker_demand: int = 1

    def __post_init__(self) -> None:
        if not self.eligible:
            raise InstanceError(f"operation ({self.job_id + 1},{self.op_index}) has no eligible machine")
        for machine, tau in self.eligible:
            if machine < 0:
                raise InstanceError(f"negative machine id {machine}")
            if tau < 1:
                raise InstanceError(
                    f"operation ({self.job_id + 1},{self.op_index}) has processing time {tau} < 1"
                )
        if self.energy_demand < 0:
            raise InstanceError("energy demand must be non-negative")
        if self.worker_demand < 1:
            raise InstanceError("worker demand must be >= 1")

    @property
    def max_time(self) -> int:
        return max(tau for _, tau in self.eligible)

    @property
    def min_time(self) -> int:
        return min(tau for _, tau in self.eligible)


@dataclass(frozen=True)
class Instance:
    """A flexible job shop with per-operation energy and worker demands."""

    jobs: tuple[tuple[Operation, ...], ...]
    n_machines: int
    horizon: int
    name: str = ""

    def __post_init__(self) -> None:
        if self.n_machines < 1:
            raise InstanceError("instance needs at least one machine")
        for i, job in enumerate(self.jobs):
            if not job:
                raise InstanceError(f"job {i + 1} has no operations")
            for j, op in enumerate(job, start=1):
                if op.job_id != i or op.op_index != j:
                    raise InstanceError(f"operation at job {i + 1} position {j} is mislabelled")
                for machine, _ in op.eligible:
                    if machine >= self.n_machines:
                        raise InstanceError(
                            f"operation ({i + 1},{j}) references machine {machine + 1} > {self.n_machines}"
                        )
        if self.horizon < self.totality_bound:
            raise InstanceError(
                f"horizon {self.horizon} below the decoding bound {self.totality_bound}"
            )

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @property
    def n_operations(self) -> int:
        return sum(len(job) for job in self.jobs)

    @property
    def totality_bound(self) -> int:
        return sum(op.max_time for job in self.jobs for op in job)

    @property
    def operations(self) -> list[Operation]:
        """All operations in job-major order (the global operation index)."""
        return [op for job in self.jobs for op in job]

    @cached_property
    def arrays(self) -> "InstanceArrays":
        return InstanceArrays.build(self)

    def with_demands(
        self,
        energy: dict[tuple[int, int], float] | None = None,
        workers: dict[tuple[int, int], int] | None = None,
    ) -> "Instance":
        """Copy with energy and/or worker demands replaced, keyed by (job_id, op_index)."""
        energy = energy or {}
        workers = workers or {}
        jobs = tuple(
            tuple(
                replace(
                    op,
                    energy_demand=energy.get((op.job_id, op.op_index), op.energy_demand),
                    worker_demand=workers.get((op.job_id, op.op_index), op.worker_demand),
                )
                for op in job
            )
            for job in self.jobs
        )
        return replace(self, jobs=jobs)


@dataclass(frozen=True)
class InstanceArrays:
    """Flat numpy views of an instance, indexed by global operation number."""

    job_of: np.ndarray
    pos_of: np.ndarray
    job_offset: np.ndarray
    job_len: np.ndarray
    n_eligible: np.ndarray
    elig_machine: np.ndarray
    elig_time: np.ndarray
    energy: np.ndarray
    workers: np.ndarray

    @classmethod
    def build(cls, inst: Instance) -> "InstanceArrays":
        ops = inst.operations
        n = len(ops)
        width = max((len(op.eligible) for op in ops), default=1)
        elig_machine = np.full((n, width), -1, dtype=np.int64)
        elig_time = np.zeros((n, width), dtype=np.int64)
        for k, op in enumerate(ops):
            for e, (machine, tau) in enumerate(op.eligible):
                elig_machine[k, e] = machine
                elig_time[k, e] = tau
        job_len = np.array([len(job) for job in inst.jobs], dtype=np.int64)
        job_offset = np.concatenate([[0], np.cumsum(job_len)[:-1]]).astype(np.int64)
        out = cls(
            job_of=np.array([op.job_id for op in ops], dtype=np.int64),
            pos_of=np.array([op.op_index - 1 for op in ops], dtype=np.int64),
            job_offset=job_offset,
            job_len=job_len,
            n_eligible=np.array([len(op.eligible) for op in ops], dtype=np.int64),
            elig_machine=elig_machine,
            elig_time=elig_time,
            energy=np.array([op.energy_demand for op in ops], dtype=np.float64),
            workers=np.array([op.worker_demand for op in ops], dtype=np.int64),
        )
        for arr in vars(out).values():
            arr.setflags(write=False)
        return out


@dataclass(frozen=True, eq=False)
class MarketSeries:
    """Per-step energy price and emission factor, piecewise constant in time."""

    price: np.ndarray
    emission: np.ndarray

    def __post_init__(self) -> None:
        price = np.array(self.price, dtype=np.float64)
        emission = np.array(self.emission, dtype=np.float64)
        if price.ndim != 1 or emission.ndim != 1:
            raise MarketError("market series must be one-dimensional")
        if price.size == 0 or emission.size == 0:
            raise MarketError("market series must be non-empty")
        if price.size != emission.size:
            raise MarketError("price and emission series differ in length")
        if not (np.all(np.isfinite(price)) and np.all(np.isfinite(emission))):
            raise MarketError("market values must be finite")
        if np.any(price < 0) or np.any(emission < 0):
            raise MarketError("market values must be non-negative")
        price.setflags(write=False)
        emission.setflags(write=False)
        object.__setattr__(self, "price", price)
        object.__setattr__(self, "emission", emission)

    def __len__(self) -> int:
        return int(self.price.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarketSeries):
            return NotImplemented
        return np.array_equal(self.price, other.price) and np.array_equal(self.emission, other.emission)

    __hash__ = None  # type: ignore[assignment]

    def extended(self, length: int) -> "MarketSeries":
        """Cyclically repeat (or truncate) the series to exactly ``length`` steps."""
        if length < 1:
            raise MarketError("length must be >= 1")
        idx = np.arange(length) % len(self)
        return MarketSeries(self.price[idx], self.emission[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "price", "emission"])
        for t, (p, e) in enumerate(zip(self.price, self.emission)):
            writer.writerow([t, repr(float(p)), repr(float(e))])
        return buf.getvalue()


@dataclass(frozen=True)
class EnrichmentConfig:
    """Deterministic stand-in for energy enrichment of benchmark files.

    Values are drawn uniformly from the given closed ranges and rounded to
    two decimals so that CSV exports round-trip exactly.
    """

    seed: int = 0
    price_range: tuple[float, float] = (1.0, 10.0)
    emission_range: tuple[float, float] = (1.0, 10.0)
    energy_range: tuple[float, float] = (1.0, 5.0)
    block_length: int = 4

    def __post_init__(self) -> None:
        for name in ("price_range", "emission_range", "energy_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi, got {(lo, hi)}")
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")


# ---------------------------------------------------------------------------
# .fjs format


def parse_fjs(text: str, name: str = "") -> Instance:
    """Parse a Brandimarte ``.fjs`` file.

    The header is ``n m`` with an optional third token (average flexibility)
    that is ignored. Each following non-empty line describes one job::

        nu  k1 m t m t ...  k2 m t ...

    Machines are 1-based in the file and 0-based in the returned instance.
    Worker demands default to 1 and energy demands to 1.0; see
    :func:`enrich` and :func:`assign_worker_demands`.
    """
    lines = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise InstanceError("line 1: empty instance file")
    header_no, header = lines[0]
    try:
        n_jobs, n_machines = int(header[0]), int(header[1])
        if len(header) > 2:
            float(header[2])
    except (IndexError, ValueError):
        raise InstanceError(f"line {header_no}: malformed header {' '.join(header)!r}") from None
    if n_jobs < 0 or n_machines < 1 or len(header) > 3:
        raise InstanceError(f"line {header_no}: malformed header {' '.join(header)!r}")
    if len(lines) - 1 < n_jobs:
        raise InstanceError(f"line {lines[-1][0]}: expected {n_jobs} job lines, found {len(lines) - 1}")
    if len(lines) - 1 > n_jobs:
        raise InstanceError(f"line {lines[n_jobs + 1][0]}: unexpected content after the last job")

    jobs = []
    for i, (no, tokens) in enumerate(lines[1:]):
        try:
            values = [int(tok) for tok in tokens]
        except ValueError:
            raise InstanceError(f"line {no}: non-integer token") from None
        n_ops = values[0]
        if n_ops < 1:
            raise InstanceError(f"line {no}: job {i + 1} has no operations")
        pos = 1
        ops = []
        for j in range(1, n_ops + 1):
            if pos >= len(values):
                raise InstanceError(f"line {no}: job {i + 1} declares {n_ops} operations but provides {j - 1}")
            k = values[pos]
            pos += 1
            if k < 1:
                raise InstanceError(f"line {no}: operation {j} has no eligible machine")
            pairs = values[pos : pos + 2 * k]
            if len(pairs) < 2 * k:
                raise InstanceError(f"line {no}: operation {j} is truncated")
            pos += 2 * k
            eligible = []
            for machine, tau in zip(pairs[::2], pairs[1::2]):
                if not 1 <= machine <= n_machines:
                    raise InstanceError(f"line {no}: machine {machine} outside 1..{n_machines}")
                if tau < 1:
                    raise InstanceError(f"line {no}: processing time {tau} < 1")
                eligible.append((machine - 1, tau))
            ops.append(Operation(job_id=i, op_index=j, eligible=tuple(eligible)))
        if pos != len(values):
            raise InstanceError(f"line {no}: trailing tokens after {n_ops} operations")
        jobs.append(tuple(ops))

    horizon = sum(op.max_time for job in jobs for op in job)
    return Instance(jobs=tuple(jobs), n_machines=n_machines, horizon=horizon, name=name)


def serialize_fjs(inst: Instance) -> str:
    """Write the routing part of ``inst`` in ``.fjs`` layout."""
    n_alt = sum(len(op.eligible) for op in inst.operations)
    avg = n_alt / max(inst.n_operations, 1)
    out = [f"{inst.n_jobs} {inst.n_machines} {avg:g}"]
    for job in inst.jobs:
        tokens = [str(len(job))]
        for op in job:
            tokens.append(str(len(op.eligible)))
            for machine, tau in op.eligible:
                tokens += [str(machine + 1), str(tau)]
        out.append(" ".join(tokens))
    return "\n".join(out) + "\n"


def instance_to_dict(inst: Instance) -> dict:
    return {
        "name": inst.name,
        "n_machines": inst.n_machines,
        "horizon": inst.horizon,
        "jobs": [
            [
                {
                    "eligible": [[m, t] for m, t in op.eligible],
                    "energy_demand": op.energy_demand,
                    "worker_demand": op.worker_demand,
                }
                for op in job
            ]
            for job in inst.jobs
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    jobs = tuple(
        tuple(
            Operation(
                job_id=i,
                op_index=j,
                eligible=tuple((int(m), int(t)) for m, t in op["eligible"]),
                energy_demand=float(op["energy_demand"]),
                worker_demand=int(op["worker_demand"]),
            )
            for j, op in enumerate(job, start=1)
        )
        for i, job in enumerate(data["jobs"])
    )
    return Instance(jobs=jobs, n_machines=int(data["n_machines"]), horizon=int(data["horizon"]), name=data.get("name", ""))


def worker_demand(i: int, j: int) -> int:
    """Worker demand of operation ``j`` of job ``i`` (both 1-based)."""
    return j % (i % 4 + 1) + 1


def assign_worker_demands(inst: Instance) -> Instance:
    workers = {
        (op.job_id, op.op_index): worker_demand(op.job_id + 1, op.op_index) for op in inst.operations
    }
    return inst.with_demands(workers=workers)


def synth_energy_demand(i: int, j: int, tau: int, seed: int, energy_range: tuple[float, float]) -> float:
    """Per-step energy demand of operation (i, j) with shortest time ``tau``."""
    rng = np.random.default_rng([seed, i, j, tau])
    lo, hi = energy_range
    return round(float(rng.uniform(lo, hi)), 2)


def enrich(inst: Instance, config: EnrichmentConfig | None = None) -> Instance:
    """Assign synthesized energy demands and formula-based worker demands."""
    config = config or EnrichmentConfig()
    energy = {
        (op.job_id, op.op_index): synth_energy_demand(
            op.job_id + 1, op.op_index, op.min_time, config.seed, config.energy_range
        )
        for op in inst.operations
    }
    return assign_worker_demands(inst.with_demands(energy=energy))


def load_instance(path: str | Path, config: EnrichmentConfig | None = None) -> Instance:
    """Read and enrich an ``.fjs`` file (``.json`` files are loaded verbatim)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return instance_from_dict(json.loads(text))
    return enrich(parse_fjs(text, name=path.stem), config)


def benchmark_path(name: str) -> Path:
    """Path of a bundled benchmark file such as ``"mk01"``."""
    path = Path(__file__).parent / "data" / f"{name}.fjs"
    if not path.exists():
        raise FileNotFoundError(f"no bundled instance {name!r}")
    return path


BENCHMARKS = tuple(f"mk{k:02d}" for k in range(1, 11))


# ---------------------------------------------------------------------------
# market series


def load_market(text: str, horizon: int) -> MarketSeries:
    """Parse a ``t,price,emission`` CSV and fit it to ``horizon`` steps.

    Each row holds its values until the next row's ``t``; the last row
    covers a single step. Shorter series repeat cyclically, longer ones are
    truncated.
    """
    if horizon < 1:
        raise MarketError("horizon must be >= 1")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise MarketError("empty market CSV")
    missing = {"t", "price", "emission"} - {f.strip() for f in reader.fieldnames}
    if missing:
        raise MarketError(f"market CSV is missing columns: {sorted(missing)}")
    times, prices, emissions = [], [], []
    for row_no, row in enumerate(reader, start=2):
        row = {k.strip(): v for k, v in row.items() if k is not None}
        try:
            t = int(row["t"])
            p = float(row["price"])
            e = float(row["emission"])
        except (TypeError, ValueError):
            raise MarketError(f"line {row_no}: non-numeric cell") from None
        if not (np.isfinite(p) and np.isfinite(e)):
            raise MarketError(f"line {row_no}: non-finite value")
        if p < 0 or e < 0:
            raise MarketError(f"line {row_no}: negative value")
        if (not times and t != 0) or (times and t <= times[-1]):
            raise MarketError(f"line {row_no}: t must start at 0 and strictly increase")
        times.append(t)
        prices.append(p)
        emissions.append(e)
    if not times:
        raise MarketError("market CSV has no rows")
    lengths = np.diff(times + [times[-1] + 1])
    series = MarketSeries(np.repeat(prices, lengths), np.repeat(emissions, lengths))
    return series.extended(horizon)


def synth_market(horizon: int, seed: int, config: EnrichmentConfig | None = None) -> MarketSeries:
    """Reproducible piecewise-constant price and emission series.

    Values change every ``config.block_length`` steps and are drawn
    uniformly from ``config.price_range`` and ``config.emission_range``.
    """
    if horizon < 1:
        raise MarketError("horizon must be >= 1")
    config = config or EnrichmentConfig()
    rng = np.random.default_rng(seed)
    n_blocks = -(-horizon // config.block_length)
    price = np.round(rng.uniform(*config.price_range, size=n_blocks), 2)
    emission = np.round(rng.uniform(*config.emission_range, size=n_blocks), 2)
    idx = np.arange(horizon) // config.block_length
    return MarketSeries(price[idx], emission[idx])


def load_enrichment(path: str | Path) -> EnrichmentConfig:
    """Read an enrichment config.

    The file is ``key = value`` lines, optionally under an ``[enrichment]``
    section. Ranges are written ``lo, hi``.
    """
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser()
    if not text.lstrip().startswith("["):
        text = "[enrichment]\n" + text
    parser.read_string(text)
    section = parser["enrichment"]
    kwargs: dict = {}
    for key in section:
        raw = section[key]
        if key in ("seed", "block_length"):
            kwargs[key] = int(raw)
        elif key in ("price_range", "emission_range", "energy_range"):
            lo, hi = (float(x) for x in raw.split(","))
            kwargs[key] = (lo, hi)
        else:
            raise ValueError(f"unknown enrichment key {key!r}")
    return EnrichmentConfig(**kwargs)
