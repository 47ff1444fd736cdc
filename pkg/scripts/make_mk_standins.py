"""Regenerate the bundled mk01-mk10 files.

The original Brandimarte files are not redistributed here. These stand-ins
follow the published generation parameters of the set (jobs, machines,
operations per job, maximum flexibility, processing-time range) and hit the
known total operation counts. Run from the repository root::

    python scripts/make_mk_standins.py
"""

from pathlib import Path

import numpy as np

from eafjsp.instance import Instance, Operation, serialize_fjs

# name: (jobs, machines, ops-per-job range, max machines per op, time range, total ops)
PARAMS = {
    "mk01": (10, 6, (5, 7), 3, (1, 7), 55),
    "mk02": (10, 6, (5, 7), 6, (1, 7), 58),
    "mk03": (15, 8, (10, 10), 5, (1, 20), 150),
    "mk04": (15, 8, (3, 10), 3, (1, 10), 90),
    "mk05": (15, 4, (5, 10), 2, (5, 10), 106),
    "mk06": (10, 15, (15, 15), 5, (1, 10), 150),
    "mk07": (20, 5, (5, 5), 5, (1, 20), 100),
    "mk08": (20, 10, (10, 14), 2, (5, 20), 225),
    "mk09": (20, 10, (10, 14), 5, (5, 20), 240),
    "mk10": (20, 15, (10, 14), 5, (5, 20), 240),
}


def ops_per_job(rng, n_jobs, lo, hi, total):
    counts = rng.integers(lo, hi + 1, size=n_jobs)
    while counts.sum() != total:
        k = rng.integers(n_jobs)
        if counts.sum() < total and counts[k] < hi:
            counts[k] += 1
        elif counts.sum() > total and counts[k] > lo:
            counts[k] -= 1
    return counts


def make(name, seed):
    n_jobs, n_machines, (lo, hi), flex, (tlo, thi), total = PARAMS[name]
    rng = np.random.default_rng(seed)
    jobs = []
    for i, n_ops in enumerate(ops_per_job(rng, n_jobs, lo, hi, total)):
        ops = []
        for j in range(1, n_ops + 1):
            k = int(rng.integers(1, min(flex, n_machines) + 1))
            machines = sorted(rng.choice(n_machines, size=k, replace=False).tolist())
            eligible = tuple((m, int(rng.integers(tlo, thi + 1))) for m in machines)
            ops.append(Operation(job_id=i, op_index=j, eligible=eligible))
        jobs.append(tuple(ops))
    horizon = sum(op.max_time for job in jobs for op in job)
    return Instance(jobs=tuple(jobs), n_machines=n_machines, horizon=horizon, name=name)


def main():
    out = Path(__file__).resolve().parents[1] / "src" / "eafjsp" / "data"
    for k, name in enumerate(PARAMS, start=1):
        (out / f"{name}.fjs").write_text(serialize_fjs(make(name, 1993 + k)), encoding="utf-8")


if __name__ == "__main__":
    main()
