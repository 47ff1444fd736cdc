"""Command line entry point: ``eafjsp {solve,experiment,oracle,metrics,gantt}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .encoding import Genotype, Problem
from .evolution import PROFILES, run
from .harness import (
    ALGORITHMS,
    ExperimentSpec,
    compute_metrics,
    emit_gantt,
    replay,
    resolve,
    run_experiment,
    spec_from_config,
)
from .oracle import BudgetExceeded, epsilon_grid, exact_front


def _evolution_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=sorted(PROFILES), default=None,
                   help="population/generation preset (default: desk)")
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--crossover-rate", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--samples", type=int, help="HypE Monte Carlo samples (default: population size)")
    p.add_argument("--refinement", choices=["rank0", "all", "none"])
    p.add_argument("--threads", type=int, help="decode/refine threads per run")
    p.add_argument("--seed", type=int)


def _market_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--market", help="CSV with columns t,price,emission (default: synthetic)")
    p.add_argument("--market-seed", type=int, default=None)
    p.add_argument("--enrichment", help="INI file with an [enrichment] section")


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "profile", None):
        out.update(PROFILES[args.profile])
    pairs = {
        "population_size": "population",
        "generations": "generations",
        "mutation_rate": "mutation_rate",
        "crossover_rate": "crossover_rate",
        "theta": "theta",
        "hype_samples": "samples",
        "refinement_policy": "refinement",
        "workers": "threads",
    }
    for field, flag in pairs.items():
        value = getattr(args, flag, None)
        if value is not None:
            out[field] = value
    return out


def _spec_for(args, instances, algorithms) -> ExperimentSpec:
    return ExperimentSpec(
        instances=instances,
        algorithms=algorithms,
        runs=1,
        seed=args.seed or 0,
        market_file=args.market,
        market_seed=args.market_seed or 0,
        enrichment_file=args.enrichment,
        config={**PROFILES["desk"], **_overrides(args)},
    )


def cmd_solve(args) -> int:
    spec = _spec_for(args, [args.instance], [args.algorithm])
    spec.validate()
    inst, market = resolve(spec, args.instance)
    result = run(inst, market, spec.evolution_config(args.algorithm, 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(result.to_json(), encoding="utf-8")
    (out / "front.csv").write_text(result.front_csv(), encoding="utf-8")
    print(f"{inst.name}: {len(result.final_front)} non-dominated points in {result.wall_clock:.1f}s -> {out}")
    if args.gantt:
        best = min(result.population.individuals, key=lambda ind: tuple(ind.objectives))
        emit_gantt(Problem(inst, market).decode(best.genotype), out / "gantt")
    return 0


def cmd_experiment(args) -> int:
    if args.replay:
        out = replay(args.replay, args.out or "replay", workers=args.workers)
        print(f"replayed into {out}")
        return 0
    overrides = {
        "instances": args.instances or None,
        "algorithms": args.algorithm or None,
        "runs": args.runs,
        "seed": args.seed,
        "out": args.out,
        "workers": args.workers,
        "market_file": args.market,
        "market_seed": args.market_seed,
        "enrichment_file": args.enrichment,
        "config": _overrides(args),
    }
    if args.config:
        spec = spec_from_config(args.config, **overrides)
    else:
        base = ExperimentSpec(instances=[], config={**PROFILES["desk"]})
        for key, value in overrides.items():
            if key == "config":
                base.config.update(value)
            elif value is not None:
                setattr(base, key, value)
        spec = base
    out = run_experiment(spec)
    failures = out / "failures.json"
    if failures.exists():
        print(f"some cells failed, see {failures}", file=sys.stderr)
        return 1
    print(f"results in {out}")
    return 0


def cmd_oracle(args) -> int:
    spec = _spec_for(args, [args.instance], ["mnsga3"])
    inst, market = resolve(spec, args.instance)
    try:
        ref = exact_front(inst, market)
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    text = ref.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text)
    if args.grid:
        grid = epsilon_grid(ref)
        print(f"epsilon grid: {len(grid)} cells, {grid.n_feasible} feasible, "
              f"{len(grid.distinct_points())} distinct points", file=sys.stderr)
    return 0


def cmd_metrics(args) -> int:
    metrics, trace = compute_metrics(args.results)
    print(metrics.read_text(encoding="utf-8"), end="")
    print(f"trace written to {trace}", file=sys.stderr)
    return 0


def cmd_gantt(args) -> int:
    if args.example:
        from .toys import figure2

        inst, market, genotype = figure2()
    else:
        if not (args.instance and args.genotype):
            print("gantt needs --example or both --instance and --genotype", file=sys.stderr)
            return 2
        spec = _spec_for(args, [args.instance], ["mnsga3"])
        inst, market = resolve(spec, args.instance)
        genotype = Genotype.from_dict(json.loads(Path(args.genotype).read_text(encoding="utf-8")))
    schedule = Problem(inst, market).decode(genotype)
    svg, csv_path = emit_gantt(schedule, Path(args.out))
    print(f"{svg}\n{csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eafjsp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one run on one instance")
    p.add_argument("instance", help="mk01..mk10, tiny:<seed>, or a .fjs/.json path")
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="mnsga3")
    _evolution_flags(p)
    _market_flags(p)
    p.add_argument("--gantt", action="store_true", help="also chart the schedule with the lowest makespan")
    p.add_argument("--out", default="solve_out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="seeded batch over instances, algorithms and runs")
    p.add_argument("instances", nargs="*")
    p.add_argument("--config", help="INI file; command line flags override it")
    p.add_argument("--algorithm", action="append", choices=sorted(ALGORITHMS),
                   help="repeat to select several (default: all)")
    p.add_argument("--runs", type=int)
    p.add_argument("--workers", type=int, help="parallel cells")
    p.add_argument("--replay", help="manifest.json of a previous experiment")
    p.add_argument("--out")
    _evolution_flags(p)
    _market_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="exact Pareto front of a tiny instance")
    p.add_argument("instance")
    p.add_argument("--grid", action="store_true", help="summarize the epsilon grid")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    _market_flags(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("metrics", help="recompute metrics.csv and hv_trace.csv from stored runs")
    p.add_argument("results")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gantt", help="render a schedule as SVG plus CSV")
    p.add_argument("--example", action="store_true", help="the three-job worker-peak toy")
    p.add_argument("--instance")
    p.add_argument("--genotype", help="genotype JSON")
    p.add_argument("--out", default="gantt")
    p.add_argument("--seed", type=int)
    _market_flags(p)
    p.set_defaults(func=cmd_gantt)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
