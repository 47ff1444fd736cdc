"""Environmental selection: NSGA-III niching, theta-dominance, and HypE.

Every strategy maps an ``(n, m)`` array of objective vectors (minimized) and
a target size to the sorted indices of the survivors. Whole Pareto fronts are
admitted while they fit; the strategies differ only in how they cut the
front that does not fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import NamedTuple

import numpy as np

from .pareto import nondominated_sort

STRATEGIES = ("nsga3", "theta_dea", "hype")


# ---------------------------------------------------------------------------
# reference directions


def _simplex_lattice(n_obj: int, p: int) -> np.ndarray:
    # stars and bars: each combination of bar positions is one composition of p
    rows = []
    for bars in combinations(range(p + n_obj - 1), n_obj - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(p + n_obj - 2 - prev)
        rows.append(parts)
    return np.array(rows, dtype=float) / p


def das_dennis(n_obj: int = 4, outer: int = 12, inner: int | None = None) -> np.ndarray:
    """Two-layer simplex-lattice directions.

    The outer layer has ``comb(outer + n_obj - 1, n_obj - 1)`` points; the
    optional inner layer is built the same way and shrunk halfway toward the
    centroid. Rows sum to one.
    """
    if n_obj < 1 or outer < 1:
        raise ValueError("das_dennis needs n_obj >= 1 and outer >= 1 (zero directions otherwise)")
    dirs = _simplex_lattice(n_obj, outer)
    if inner:
        shrunk = 0.5 * _simplex_lattice(n_obj, inner) + 0.5 / n_obj
        dirs = np.vstack([dirs, shrunk])
        _, first = np.unique(np.round(dirs, 12), axis=0, return_index=True)
        dirs = dirs[np.sort(first)]
    return dirs


def lattice_size(n_obj: int, outer: int, inner: int = 0) -> int:
    size = comb(outer + n_obj - 1, n_obj - 1)
    if inner:
        size += comb(inner + n_obj - 1, n_obj - 1)
    return size


def partitions_for(pop_size: int, n_obj: int = 4) -> tuple[int, int]:
    """Largest two-layer lattice ``(p, p - 2)`` with at most ``pop_size`` directions.

    Falls back to a single layer when even ``(3, 1)`` is too large. For a
    population of 1000 in four objectives this gives (13, 11), 924 directions.
    """
    best = None
    p = 3
    while lattice_size(n_obj, p, p - 2) <= pop_size:
        best = (p, p - 2)
        p += 1
    if best is not None:
        return best
    p = 1
    while lattice_size(n_obj, p + 1) <= pop_size:
        p += 1
    return (p, 0)


def directions_for(pop_size: int, n_obj: int = 4) -> np.ndarray:
    outer, inner = partitions_for(pop_size, n_obj)
    return das_dennis(n_obj, outer, inner or None)


# ---------------------------------------------------------------------------
# normalization and association


@dataclass(frozen=True)
class NormalizationState:
    ideal: np.ndarray
    nadir: np.ndarray
    active: np.ndarray

    @classmethod
    def fit(cls, objs: np.ndarray, first_front) -> "NormalizationState":
        """Ideal from all points, nadir from the first front.

        Dimensions where nadir equals ideal are inactive: they map to 0.
        """
        objs = np.asarray(objs, dtype=float)
        ideal = objs.min(axis=0)
        nadir = objs[list(first_front)].max(axis=0)
        return cls(ideal=ideal, nadir=nadir, active=nadir > ideal)

    def apply(self, objs: np.ndarray) -> np.ndarray:
        objs = np.asarray(objs, dtype=float)
        span = np.where(self.active, self.nadir - self.ideal, 1.0)
        out = (objs - self.ideal) / span
        out[:, ~self.active] = 0.0
        return out


def projections(fn: np.ndarray, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance along (d1) and perpendicular to (d2) each direction line.

    Returns two ``(n_points, n_dirs)`` arrays. Directions with zero length
    get infinite perpendicular distance.
    """
    norms = np.linalg.norm(dirs, axis=1)
    unit = np.divide(dirs, norms[:, None], out=np.zeros_like(dirs), where=norms[:, None] > 0)
    d1 = fn @ unit.T
    sq = np.einsum("ij,ij->i", fn, fn)[:, None] - d1**2
    d2 = np.sqrt(np.maximum(sq, 0.0))
    d2[:, norms == 0] = np.inf
    return d1, d2


def _masked_dirs(dirs: np.ndarray, state: NormalizationState) -> np.ndarray:
    out = np.array(dirs, dtype=float)
    out[:, ~state.active] = 0.0
    return out


def _split(objs: np.ndarray, n_keep: int):
    """Whole fronts that fit, the front that has to be cut, and all fronts."""
    fronts = nondominated_sort(objs)
    admitted: list[int] = []
    for front in fronts:
        if len(admitted) + len(front) > n_keep:
            return admitted, front, fronts
        admitted.extend(front)
    return admitted, [], fronts


# ---------------------------------------------------------------------------
# NSGA-III


def nsga3_select(objs, n_keep: int, dirs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Survivors by front admission plus reference-direction niching.

    On the cut front, the least crowded direction (ties broken at random)
    takes its closest remaining member in normalized space, until the
    population is full.
    """
    objs = np.asarray(objs, dtype=float)
    if n_keep >= len(objs):
        return np.arange(len(objs))
    admitted, last, fronts = _split(objs, n_keep)
    if not last:
        return np.sort(np.array(admitted, dtype=np.int64))
    state = NormalizationState.fit(objs, fronts[0])
    pool = admitted + last
    _, d2 = projections(state.apply(objs[pool]), _masked_dirs(dirs, state))
    nearest = d2.argmin(axis=1)
    dist = d2[np.arange(len(pool)), nearest]
    niche = np.bincount(nearest[: len(admitted)], minlength=len(dirs))

    cand_dir = nearest[len(admitted):]
    cand_dist = dist[len(admitted):]
    taken = np.zeros(len(last), dtype=bool)
    chosen = []
    need = n_keep - len(admitted)
    while len(chosen) < need:
        open_dirs = np.unique(cand_dir[~taken])
        counts = niche[open_dirs]
        best = open_dirs[counts == counts.min()]
        j = best[rng.integers(len(best))] if len(best) > 1 else best[0]
        members = np.flatnonzero((cand_dir == j) & ~taken)
        pick = members[np.argmin(cand_dist[members])]
        taken[pick] = True
        chosen.append(last[pick])
        niche[j] += 1
    return np.sort(np.array(admitted + chosen, dtype=np.int64))


# ---------------------------------------------------------------------------
# theta-DEA


class ThetaClusters(NamedTuple):
    cluster: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    fitness: np.ndarray


def theta_clusters(fn: np.ndarray, dirs: np.ndarray, theta: float) -> ThetaClusters:
    """Assign each normalized point to the direction with least perpendicular distance."""
    d1_all, d2_all = projections(np.asarray(fn, dtype=float), np.asarray(dirs, dtype=float))
    cluster = d2_all.argmin(axis=1)
    rows = np.arange(len(cluster))
    d1 = d1_all[rows, cluster]
    d2 = d2_all[rows, cluster]
    return ThetaClusters(cluster, d1, d2, d1 + theta * d2)


def theta_dominates(i: int, j: int, clusters: ThetaClusters) -> bool:
    return bool(clusters.cluster[i] == clusters.cluster[j] and clusters.fitness[i] < clusters.fitness[j])


def theta_ranks(clusters: ThetaClusters) -> np.ndarray:
    """Theta-front index: position among strictly better members of the same cluster."""
    ranks = np.zeros(len(clusters.cluster), dtype=np.int64)
    for j in np.unique(clusters.cluster):
        members = np.flatnonzero(clusters.cluster == j)
        values = clusters.fitness[members]
        distinct = np.unique(values)
        ranks[members] = np.searchsorted(distinct, values)
    return ranks


def theta_select(objs, n_keep: int, dirs: np.ndarray, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Survivors by front admission, then theta-fronts on the cut front.

    The last theta-front that does not fit is sampled uniformly at random.
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    objs = np.asarray(objs, dtype=float)
    if n_keep >= len(objs):
        return np.arange(len(objs))
    admitted, last, fronts = _split(objs, n_keep)
    if not last:
        return np.sort(np.array(admitted, dtype=np.int64))
    state = NormalizationState.fit(objs, fronts[0])
    clusters = theta_clusters(state.apply(objs[last]), _masked_dirs(dirs, state), theta)
    ranks = theta_ranks(clusters)
    chosen: list[int] = []
    need = n_keep - len(admitted)
    last = np.asarray(last)
    for r in range(int(ranks.max()) + 1):
        level = last[ranks == r]
        if len(chosen) + len(level) <= need:
            chosen.extend(level.tolist())
        else:
            picked = rng.choice(level, size=need - len(chosen), replace=False)
            chosen.extend(np.sort(picked).tolist())
        if len(chosen) == need:
            break
    return np.sort(np.array(admitted + chosen, dtype=np.int64))


# ---------------------------------------------------------------------------
# HypE


class HypeEstimate(NamedTuple):
    fitness: np.ndarray
    volume: float
    degenerate: bool


def hype_alpha(n_points: int, k: int) -> np.ndarray:
    """Weights alpha_1..alpha_k for a sample dominated by 1..k points."""
    alpha = np.zeros(k + 1)
    prod = 1.0
    for i in range(1, k + 1):
        alpha[i] = prod / i
        prod *= (k - i) / (n_points - i) if n_points > i else 0.0
    return alpha


def hype_fitness(points, k: int, lower, upper, n_samples: int, rng: np.random.Generator,
                 chunk: int = 200_000) -> HypeEstimate:
    """Monte Carlo HypE fitness for removing ``k`` of ``points``.

    Samples are uniform in the box ``[lower, upper]``. A sample dominated by
    ``c <= k`` points adds ``alpha_c * V / n_samples`` to each of them.
    """
    points = np.asarray(points, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = len(points)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n == 0:
        return HypeEstimate(np.zeros(0), 0.0, False)
    k = min(max(k, 1), n)
    if np.any(upper <= lower):
        return HypeEstimate(np.zeros(n), 0.0, True)
    volume = float(np.prod(upper - lower))
    alpha = hype_alpha(n, k)
    fitness = np.zeros(n)
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        samples = rng.uniform(lower, upper, size=(size, len(lower)))
        dom = np.all(points[:, None, :] <= samples[None, :, :], axis=2)
        hits = dom.sum(axis=0)
        weight = np.where(hits <= k, alpha[np.minimum(hits, k)], 0.0)
        fitness += dom @ weight
        done += size
    return HypeEstimate(fitness * volume / n_samples, volume, False)


def hype_select(objs, n_keep: int, n_samples: int, rng: np.random.Generator, upper=None) -> np.ndarray:
    """Survivors by front admission, then greedy HypE pruning of the cut front.

    The sampling box spans the population minima to ``upper``; without an
    explicit bound, ``upper`` is 1.1 times the maxima of the cut front.
    Constant dimensions are dropped. The member with the lowest fitness is
    removed and fitness is re-estimated until the population fits.
    """
    objs = np.asarray(objs, dtype=float)
    if n_keep >= len(objs):
        return np.arange(len(objs))
    admitted, last, _ = _split(objs, n_keep)
    if not last:
        return np.sort(np.array(admitted, dtype=np.int64))
    lower = objs.min(axis=0)
    remaining = list(last)
    need = n_keep - len(admitted)
    while len(remaining) > need:
        pts = objs[remaining]
        top = np.asarray(upper, dtype=float) if upper is not None else pts.max(axis=0) * 1.1
        keep_dims = top > lower
        k = len(remaining) - need
        if keep_dims.any():
            fit = hype_fitness(pts[:, keep_dims], k, lower[keep_dims], top[keep_dims], n_samples, rng).fitness
        else:
            fit = np.zeros(len(remaining))
        worst = np.flatnonzero(fit == fit.min())
        drop = worst[rng.integers(len(worst))] if len(worst) > 1 else worst[0]
        remaining.pop(int(drop))
    return np.sort(np.array(admitted + remaining, dtype=np.int64))


def select(strategy: str, objs, n_keep: int, rng: np.random.Generator, *, dirs=None,
           theta: float = 5.0, n_samples: int | None = None) -> np.ndarray:
    if strategy == "nsga3":
        return nsga3_select(objs, n_keep, dirs, rng)
    if strategy == "theta_dea":
        return theta_select(objs, n_keep, dirs, theta, rng)
    if strategy == "hype":
        return hype_select(objs, n_keep, n_samples or n_keep, rng)
    raise ValueError(f"unknown selection strategy {strategy!r}")
