"""Front-quality metrics: normalization, exact hypervolume, IGD+, GD+, spacing."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .pareto import nondominated


# ---------------------------------------------------------------------------
# exact hypervolume


def _hv2(points: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((points[:, 1], points[:, 0]))
    vol = 0.0
    best_y = ref[1]
    for x, y in points[order]:
        if y < best_y:
            vol += (ref[0] - x) * (best_y - y)
            best_y = y
    return vol


def _hv3(points: np.ndarray, ref: np.ndarray) -> float:
    """Sweep along the third axis, keeping the 2-D staircase area up to date."""
    order = np.argsort(points[:, 2], kind="stable")
    xs: list[float] = []
    ys: list[float] = []
    area = 0.0
    vol = 0.0
    prev_z = None
    rx, ry = ref[0], ref[1]
    for idx in order:
        x, y, z = points[idx]
        if prev_z is not None:
            vol += area * (z - prev_z)
        prev_z = z
        pos = bisect_right(xs, x)
        if pos > 0 and ys[pos - 1] <= y:
            continue
        j = bisect_left(xs, x)
        # level covering the new point's x from the left
        level = ys[j - 1] if j > 0 else ry
        stop = j
        while stop < len(xs) and ys[stop] >= y:
            stop += 1
        right = xs[stop] if stop < len(xs) else rx
        gained = 0.0
        cursor = x
        for r in range(j, stop):
            gained += (min(level, ry) - y) * (xs[r] - cursor)
            cursor = xs[r]
            level = ys[r]
        gained += (min(level, ry) - y) * (right - cursor)
        area += gained
        del xs[j:stop]
        del ys[j:stop]
        xs.insert(j, x)
        ys.insert(j, y)
    if prev_z is not None:
        vol += area * (ref[2] - prev_z)
    return vol


def _hv(points: np.ndarray, ref: np.ndarray) -> float:
    d = points.shape[1]
    if len(points) == 0:
        return 0.0
    if d == 1:
        return float(ref[0] - points[:, 0].min())
    if d == 2:
        return _hv2(points, ref)
    if d == 3:
        return _hv3(points, ref)
    # slice along the last axis; each slab is the (d-1)-volume of points below it
    order = np.argsort(points[:, -1], kind="stable")
    pts = points[order]
    vol = 0.0
    i = 0
    n = len(pts)
    while i < n:
        z = pts[i, -1]
        j = i
        while j < n and pts[j, -1] == z:
            j += 1
        upper = pts[j, -1] if j < n else ref[-1]
        if upper > z:
            prefix = pts[:j, :-1]
            if d > 4:
                prefix = nondominated(prefix)
            vol += _hv(prefix, ref[:-1]) * (upper - z)
        i = j
    return vol


def hypervolume(points, ref_point=None) -> float:
    """Exact volume dominated by ``points`` and bounded by ``ref_point`` (minimization).

    Points not strictly below the reference point in every coordinate
    contribute nothing and are discarded. The default reference point is
    all ones, the far corner of the normalized box.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0.0
    pts = pts.reshape(len(pts), -1)
    ref = np.ones(pts.shape[1]) if ref_point is None else np.asarray(ref_point, dtype=float)
    pts = pts[np.all(pts < ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    return float(_hv(nondominated(pts), ref))


hypervolume_exact = hypervolume


def clipped_count(points, ref_point=None) -> int:
    """Number of points outside the reference box (ignored by :func:`hypervolume`)."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    pts = pts.reshape(len(pts), -1)
    ref = np.ones(pts.shape[1]) if ref_point is None else np.asarray(ref_point, dtype=float)
    return int(np.sum(~np.all(pts <= ref, axis=1)))


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class Bounds:
    best: np.ndarray
    worst: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        """Dimensions where best equals worst; they map to 0."""
        return ~(self.worst > self.best)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            return pts.reshape(0, len(self.best))
        span = np.where(self.degenerate, 1.0, self.worst - self.best)
        out = (pts - self.best) / span
        out[:, self.degenerate] = 0.0
        return out

    @classmethod
    def of(cls, *point_sets) -> "Bounds":
        stacked = [np.asarray(p, dtype=float) for p in point_sets if np.asarray(p).size]
        if not stacked:
            raise ValueError("cannot normalize an empty union of points")
        union = np.vstack(stacked)
        return cls(best=union.min(axis=0), worst=union.max(axis=0))


@dataclass(frozen=True)
class NormalizedFronts:
    fronts: list[np.ndarray]
    reference: np.ndarray
    bounds: Bounds

    @property
    def dropped(self) -> list[int]:
        return np.flatnonzero(self.bounds.degenerate).tolist()


def normalize(fronts, reference=None) -> NormalizedFronts:
    """Map every front and the reference set to [0, 1] with shared per-dimension bounds."""
    fronts = [np.asarray(f, dtype=float) for f in fronts]
    ref = np.asarray(reference if reference is not None else [], dtype=float)
    bounds = Bounds.of(*fronts, ref)
    return NormalizedFronts(
        fronts=[bounds.apply(f) for f in fronts],
        reference=bounds.apply(ref.reshape(-1, len(bounds.best)) if ref.size else ref),
        bounds=bounds,
    )


# ---------------------------------------------------------------------------
# distance indicators


def _d_plus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``D[i, j] = || max(b_j - a_i, 0) ||`` for every pair."""
    diff = np.maximum(b[None, :, :] - a[:, None, :], 0.0)
    return np.sqrt((diff**2).sum(axis=2))


def igd_plus(reference, front) -> float | None:
    """Mean over non-dominated reference points of the distance to the nearest front point.

    Only front excess over a reference point counts. Returns ``None`` when
    the reference set is empty.
    """
    ref = np.asarray(reference, dtype=float)
    pts = np.asarray(front, dtype=float)
    if ref.size == 0 or pts.size == 0:
        return None
    ref = nondominated(ref)
    return float(_d_plus(ref, pts).min(axis=1).mean())


def gd_plus(front, reference) -> float | None:
    """Mean over non-dominated front points of their excess over the nearest reference point."""
    ref = np.asarray(reference, dtype=float)
    pts = np.asarray(front, dtype=float)
    if ref.size == 0 or pts.size == 0:
        return None
    pts = nondominated(pts)
    # d+(f, r) measures how far f exceeds r
    return float(_d_plus(ref, pts).min(axis=0).mean())


def spacing(front) -> float | None:
    """Sample standard deviation of nearest-neighbour Manhattan distances."""
    pts = np.asarray(front, dtype=float)
    if len(pts) < 2:
        return None
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    np.fill_diagonal(dist, np.inf)
    d = dist.min(axis=1)
    return float(np.sqrt(((d - d.mean()) ** 2).sum() / (len(d) - 1)))


# ---------------------------------------------------------------------------
# hypervolume over generations


@dataclass(frozen=True)
class HVTrace:
    hypervolume: np.ndarray
    growth: np.ndarray


def hv_trace(snapshots, bounds: Bounds) -> HVTrace:
    """Normalized hypervolume of each generation's front and its growth over generation 0."""
    if len(snapshots) == 0:
        raise ValueError("need at least one generation snapshot")
    hv = np.array([hypervolume(bounds.apply(front)) for front in snapshots])
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = (hv - hv[0]) / hv[0] if hv[0] > 0 else np.full(len(hv), np.nan)
    return HVTrace(hv, growth)
