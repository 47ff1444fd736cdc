"""Seeded experiment batches, result trees on disk, and Gantt charts.

A result tree looks like::

    out/
      manifest.json                 seeds, config, instance fingerprints, code hash
      reference/<instance>.json     exact reference set (tiny instances only)
      runs/<instance>/<alg>/runXX.json, runXX.front.csv
      metrics.csv                   one row per cell, plus mean/best rows
      hv_trace.csv                  normalized hypervolume per generation
      timings.json                  wall-clock per cell (not replay-stable)
      failures.json                 only when some cell raised
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .encoding import Schedule
from .evolution import EvolutionConfig, PROFILES, RunResult, run
from .instance import (
    BENCHMARKS,
    EnrichmentConfig,
    Instance,
    MarketSeries,
    benchmark_path,
    load_enrichment,
    load_instance,
    load_market,
    synth_market,
)
from .metrics import Bounds, gd_plus, hv_trace, hypervolume, igd_plus, spacing
from .oracle import BudgetExceeded, ReferenceSet, TinyInstanceLimit, exact_front, fingerprint, tiny_instance

log = logging.getLogger(__name__)

ALGORITHMS = {"mnsga3": "nsga3", "mtheta": "theta_dea", "mhype": "hype"}
METRIC_COLUMNS = ["instance", "algorithm", "run", "|R|", "gap_max", "HV_R", "IGD+", "GD+", "HV_diff", "spacing"]
TRACE_COLUMNS = ["instance", "algorithm", "run", "generation", "hv", "growth"]
VOLATILE_FILES = ("timings.json",)


@dataclass
class ExperimentSpec:
    instances: list[str]
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    runs: int = 10
    seed: int = 0
    market_file: str | None = None
    market_seed: int = 0
    enrichment_file: str | None = None
    config: dict = field(default_factory=dict)
    out: str = "results"
    workers: int = 1

    def validate(self) -> None:
        if not self.instances:
            raise ValueError("experiment needs at least one instance")
        if not self.algorithms:
            raise ValueError("experiment needs at least one algorithm")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for name in self.instances:
            if not (name in BENCHMARKS or name.startswith("tiny:") or Path(name).exists()):
                raise FileNotFoundError(f"instance {name!r} not found")
        for path in (self.market_file, self.enrichment_file):
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(path)
        allowed = {f.name for f in fields(EvolutionConfig)} - {"seed", "selection"}
        bad = set(self.config) - allowed
        if bad:
            raise ValueError(f"unknown evolution settings: {sorted(bad)}")
        self.evolution_config("mnsga3", 0).validate()

    def evolution_config(self, algorithm: str, run_index: int) -> EvolutionConfig:
        return EvolutionConfig(**{**self.config, "selection": ALGORITHMS[algorithm], "seed": self.seed + run_index})

    def cells(self) -> list[tuple[str, str, int]]:
        return [(i, a, r) for i in self.instances for a in self.algorithms for r in range(self.runs)]


def instance_key(name: str) -> str:
    return name.replace(":", "") if name.startswith("tiny:") else Path(name).stem


def resolve(spec: ExperimentSpec, name: str) -> tuple[Instance, MarketSeries]:
    enrichment = load_enrichment(spec.enrichment_file) if spec.enrichment_file else EnrichmentConfig()
    if name.startswith("tiny:"):
        inst, market = tiny_instance(int(name.split(":", 1)[1]))
    else:
        path = benchmark_path(name) if name in BENCHMARKS else Path(name)
        inst = load_instance(path, enrichment)
        market = None
    if spec.market_file:
        market = load_market(Path(spec.market_file).read_text(encoding="utf-8"), inst.horizon)
    elif market is None:
        market = synth_market(inst.horizon, spec.market_seed, enrichment)
    return inst, market


def code_hash() -> str:
    digest = hashlib.sha256()
    root = Path(__file__).parent
    for path in sorted(root.rglob("*.py")):
        digest.update(path.relative_to(root).as_posix().encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _run_cell(args) -> tuple[str, str, int, dict | None, float, str | None]:
    spec, name, algorithm, run_index = args
    try:
        inst, market = resolve(spec, name)
        result = run(inst, market, spec.evolution_config(algorithm, run_index))
        return name, algorithm, run_index, result.to_dict(include_timing=False), result.wall_clock, None
    except Exception:  # recorded per cell, the batch continues
        return name, algorithm, run_index, None, 0.0, traceback.format_exc()


def reference_for(inst: Instance, market: MarketSeries) -> ReferenceSet:
    try:
        return exact_front(inst, market, TinyInstanceLimit())
    except BudgetExceeded as exc:
        log.info("no reference set for %s: %s", inst.name, exc)
        return ReferenceSet(np.zeros((0, 4)), np.zeros(0), fingerprint(inst, market))


def _dump(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def run_experiment(spec: ExperimentSpec) -> Path:
    """Run every (instance, algorithm, run) cell and write the result tree."""
    spec.validate()
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "spec": asdict(spec),
        "code_version": __version__,
        "code_hash": code_hash(),
        "cells": [
            {"instance": i, "algorithm": a, "run": r, "seed": spec.seed + r}
            for i, a, r in spec.cells()
        ],
        "instances": {},
    }
    for name in spec.instances:
        inst, market = resolve(spec, name)
        ref = reference_for(inst, market)
        manifest["instances"][name] = {"fingerprint": fingerprint(inst, market), "reference_points": len(ref)}
        _dump(out / "reference" / f"{instance_key(name)}.json", ref.to_json())
    _dump(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))

    jobs = [(spec, i, a, r) for i, a, r in spec.cells()]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            outcomes = list(pool.map(_run_cell, jobs))
    else:
        outcomes = [_run_cell(job) for job in jobs]

    timings = {}
    failures = {}
    for name, algorithm, run_index, data, wall, error in outcomes:
        key = f"{instance_key(name)}/{algorithm}/run{run_index:02d}"
        if error is not None:
            failures[key] = error
            continue
        result = RunResult.from_dict(data)
        base = out / "runs" / instance_key(name) / algorithm / f"run{run_index:02d}"
        _dump(base.with_suffix(".json"), json.dumps(data, sort_keys=True))
        _dump(base.with_suffix(".front.csv"), result.front_csv())
        timings[key] = wall
    _dump(out / "timings.json", json.dumps(timings, indent=2, sort_keys=True))
    if failures:
        _dump(out / "failures.json", json.dumps(failures, indent=2, sort_keys=True))
    compute_metrics(out)
    return out


def load_manifest(path: str | Path) -> ExperimentSpec:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ExperimentSpec(**data["spec"])


def replay(manifest_path: str | Path, out: str | Path, workers: int | None = None) -> Path:
    """Re-run an experiment from its manifest into a new directory."""
    spec = load_manifest(manifest_path)
    spec.out = str(out)
    if workers is not None:
        spec.workers = workers
    return run_experiment(spec)


def tree_digest(root: str | Path, ignore_spec_fields=("out", "workers")) -> dict[str, str]:
    """SHA-256 of every replay-stable file under ``root``.

    Volatile files are skipped, and the manifest is hashed without the
    output directory and worker count, which do not affect results.
    """
    root = Path(root)
    digests = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.name in VOLATILE_FILES:
            continue
        data = path.read_bytes()
        if path.name == "manifest.json":
            manifest = json.loads(data)
            for key in ignore_spec_fields:
                manifest["spec"].pop(key, None)
            data = json.dumps(manifest, sort_keys=True).encode()
        digests[path.relative_to(root).as_posix()] = hashlib.sha256(data).hexdigest()
    return digests


# ---------------------------------------------------------------------------
# metrics over a result tree


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _load_runs(out: Path) -> dict[str, dict[str, dict[int, RunResult]]]:
    runs: dict = {}
    for path in sorted((out / "runs").glob("*/*/run*.json")):
        key, algorithm = path.parent.parent.name, path.parent.name
        index = int(path.stem[3:])
        data = json.loads(path.read_text(encoding="utf-8"))
        runs.setdefault(key, {}).setdefault(algorithm, {})[index] = RunResult.from_dict(data)
    return runs


def compute_metrics(out: str | Path) -> tuple[Path, Path]:
    """(Re)compute ``metrics.csv`` and ``hv_trace.csv`` from stored runs and reference sets."""
    out = Path(out)
    runs = _load_runs(out)
    metric_rows = []
    trace_rows = []
    for key in sorted(runs):
        ref_path = out / "reference" / f"{key}.json"
        ref = ReferenceSet.from_json(ref_path.read_text(encoding="utf-8")) if ref_path.exists() else None
        ref_points = ref.points if ref is not None else np.zeros((0, 4))
        by_alg = runs[key]
        finals = [r.final_front for alg in by_alg.values() for r in alg.values()]
        bounds = Bounds.of(*finals, ref_points)
        hv_r = hypervolume(bounds.apply(ref_points)) if len(ref_points) else 0.0
        for algorithm in sorted(by_alg):
            cell_rows = []
            for index in sorted(by_alg[algorithm]):
                front = bounds.apply(by_alg[algorithm][index].final_front)
                norm_ref = bounds.apply(ref_points)
                row = {
                    "instance": key,
                    "algorithm": algorithm,
                    "run": index,
                    "|R|": len(ref_points),
                    "gap_max": ref.gap_max if ref is not None and len(ref_points) else None,
                    "HV_R": hv_r,
                    "IGD+": igd_plus(norm_ref, front),
                    "GD+": gd_plus(front, norm_ref),
                    "HV_diff": hv_r - hypervolume(front),
                    "spacing": spacing(front),
                }
                cell_rows.append(row)
            metric_rows.extend(cell_rows)
            metric_rows.extend(_aggregate(cell_rows))

        snapshots = [f for alg in by_alg.values() for r in alg.values() for f in r.fronts]
        trace_bounds = Bounds.of(*snapshots, ref_points)
        for algorithm in sorted(by_alg):
            for index in sorted(by_alg[algorithm]):
                trace = hv_trace(by_alg[algorithm][index].fronts, trace_bounds)
                for gen, (hv, growth) in enumerate(zip(trace.hypervolume, trace.growth)):
                    trace_rows.append([key, algorithm, index, gen, hv, None if np.isnan(growth) else growth])

    metrics_path = out / "metrics.csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for row in metric_rows:
        writer.writerow([_fmt(row[c]) if c not in ("instance", "algorithm", "run") or isinstance(row[c], int) else row[c] for c in METRIC_COLUMNS])
    _dump(metrics_path, buf.getvalue())

    trace_path = out / "hv_trace.csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in trace_rows:
        writer.writerow([row[0], row[1], row[2], row[3], _fmt(row[4]), _fmt(row[5])])
    _dump(trace_path, buf.getvalue())
    return metrics_path, trace_path


def _aggregate(rows: list[dict]) -> list[dict]:
    """Mean and best rows; best is the minimum of each metric over runs."""
    out = []
    for label, fn in (("mean", np.mean), ("best", np.min)):
        agg = {"instance": rows[0]["instance"], "algorithm": rows[0]["algorithm"], "run": label}
        for col in ("|R|", "gap_max", "HV_R"):
            agg[col] = rows[0][col]
        for col in ("IGD+", "GD+", "HV_diff", "spacing"):
            values = [r[col] for r in rows if r[col] is not None]
            agg[col] = float(fn(values)) if values else None
        out.append(agg)
    return out


# ---------------------------------------------------------------------------
# configuration files


def spec_from_config(path: str | Path, **overrides) -> ExperimentSpec:
    """Build a spec from an INI-style file; keyword overrides win.

    Sections: ``[experiment]`` (instances, algorithms, runs, seed, out,
    workers, profile), ``[market]`` (file, seed, enrichment) and
    ``[evolution]`` (any :class:`EvolutionConfig` field).
    """
    parser = configparser.ConfigParser()
    parser.read(path, encoding="utf-8")
    exp = parser["experiment"] if parser.has_section("experiment") else {}
    market = parser["market"] if parser.has_section("market") else {}
    evo = dict(parser["evolution"]) if parser.has_section("evolution") else {}
    config = dict(PROFILES[exp.get("profile", "desk")])
    config.update({k: _coerce(k, v) for k, v in evo.items()})
    kwargs = {
        "instances": exp.get("instances", "").split(),
        "algorithms": exp.get("algorithms", " ".join(ALGORITHMS)).split(),
        "runs": int(exp.get("runs", 10)),
        "seed": int(exp.get("seed", 0)),
        "out": exp.get("out", "results"),
        "workers": int(exp.get("workers", 1)),
        "market_file": market.get("file"),
        "market_seed": int(market.get("seed", 0)),
        "enrichment_file": market.get("enrichment"),
        "config": config,
    }
    config_overrides = overrides.pop("config", {}) or {}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    kwargs["config"].update({k: v for k, v in config_overrides.items() if v is not None})
    return ExperimentSpec(**kwargs)


def _coerce(key: str, value: str):
    types = {f.name: f.type for f in fields(EvolutionConfig)}
    kind = str(types.get(key, "str"))
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return value


# ---------------------------------------------------------------------------
# Gantt chart


def emit_gantt(schedule: Schedule, path: str | Path) -> tuple[Path, Path]:
    """Write an SVG Gantt chart and its CSV twin next to it.

    The chart has one bar row per machine, price and emission step curves on
    a secondary axis, and a worker-load row underneath.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    svg_path = path.with_suffix(".svg")
    csv_path = path.with_suffix(".csv")
    _dump(csv_path, schedule.gantt_csv())

    with plt.rc_context({"svg.hashsalt": "eafjsp"}):
        _draw_gantt(plt, schedule, svg_path)
    return svg_path, csv_path


def _draw_gantt(plt, schedule: Schedule, svg_path: Path) -> None:
    inst = schedule.instance
    fig, (ax, ax_w) = plt.subplots(2, 1, figsize=(8, 5), sharex=True, gridspec_kw={"height_ratios": [3, 1]})
    cmap = plt.get_cmap("tab10")
    for k, op in enumerate(inst.operations):
        m = int(schedule.machine[k])
        ax.broken_barh(
            [(int(schedule.start[k]), int(schedule.end[k] - schedule.start[k]))],
            (m + 0.6, 0.8),
            facecolors=cmap(op.job_id % 10),
            edgecolor="black",
        )
        ax.text((schedule.start[k] + schedule.end[k]) / 2, m + 1, f"({op.job_id + 1},{op.op_index})",
                ha="center", va="center", fontsize=8)
    ax.set_yticks(range(1, inst.n_machines + 1))
    ax.set_ylabel("machine")
    steps = len(schedule.worker_load)
    if steps:
        t = np.arange(steps + 1)
        n = len(schedule.market)
        price = schedule.market.price[np.arange(steps) % n]
        emission = schedule.market.emission[np.arange(steps) % n]
        ax2 = ax.twinx()
        ax2.step(t, np.r_[price, price[-1]], where="post", linestyle="--", color="black", label="price")
        ax2.step(t, np.r_[emission, emission[-1]], where="post", linestyle=":", color="grey", label="emission")
        ax2.set_ylabel("price / emission")
        ax2.legend(loc="upper right", fontsize=8)
        ax_w.bar(np.arange(steps) + 0.5, schedule.worker_load, width=1.0, color="lightsteelblue", edgecolor="black")
    ax_w.set_ylabel("workers")
    ax_w.set_xlabel("time step")
    fig.tight_layout()
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
