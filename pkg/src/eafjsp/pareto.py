"""Pareto dominance helpers (all objectives minimized)."""

from __future__ import annotations

import numpy as np


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def weakly_dominates(a, b) -> bool:
    return bool(np.all(np.asarray(a) <= np.asarray(b)))


def dominance_matrix(objs: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when point i dominates point j."""
    objs = np.asarray(objs, dtype=float)
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    return le & lt


def nondominated_sort(objs) -> list[list[int]]:
    """Split indices into successive non-dominated fronts."""
    objs = np.asarray(objs, dtype=float)
    n = len(objs)
    if n == 0:
        return []
    dom = dominance_matrix(objs)
    remaining = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(remaining == 0)
    while current.size:
        fronts.append(current.tolist())
        remaining = remaining - dom[current].sum(axis=0)
        remaining[current] = -1
        current = np.flatnonzero(remaining == 0)
    return fronts


def ranks(objs) -> np.ndarray:
    fronts = nondominated_sort(objs)
    out = np.empty(len(objs), dtype=np.int64)
    for r, front in enumerate(fronts):
        out[front] = r
    return out


def nondominated(points) -> np.ndarray:
    """Unique non-dominated rows, sorted lexicographically."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
    pts = np.unique(pts, axis=0)
    dom = dominance_matrix(pts)
    return pts[~dom.any(axis=0)]
