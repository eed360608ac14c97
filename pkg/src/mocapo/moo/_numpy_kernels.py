"""Pure-numpy kernels for Pareto primitives.

Fallback path used when numba is unavailable or disabled via
MOCAPO_DISABLE_NUMBA=1. Must stay numerically interchangeable with the
numba kernels (exact for integer outputs, <=1e-12 for float sums).
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def nds_ranks(points: np.ndarray) -> np.ndarray:
    """Front index per point (0 = non-dominated), via domination counts."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: point i dominates point j
    counts = dom.sum(axis=0).astype(np.int64)
    ranks = np.full(n, -1, dtype=np.int64)
    rank = 0
    current = counts == 0
    while current.any():
        ranks[current] = rank
        counts = counts - dom[current].sum(axis=0)
        current = (counts == 0) & (ranks == -1)
        rank += 1
    return ranks


def crowding_distances(front: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance; boundary points per objective get +inf.

    A zero objective range contributes 0 for that objective.
    """
    pts = np.ascontiguousarray(front, dtype=np.float64)
    n, m = pts.shape
    dist = np.zeros(n, dtype=np.float64)
    for j in range(m):
        v = pts[:, j]
        order = np.argsort(v, kind="mergesort")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        vrange = v[order[-1]] - v[order[0]]
        if n > 2 and vrange > 0.0:
            dist[order[1:-1]] += (v[order[2:]] - v[order[:-2]]) / vrange
    return dist


def hypervolume_2d(points: np.ndarray, ref_x: float, ref_y: float) -> float:
    """Exact sweep over the staircase of rectangles dominated within the ref box.

    Points not weakly dominated by the reference point contribute no area and
    are dropped up front.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.shape[0] == 0:
        return 0.0
    mask = (pts[:, 0] <= ref_x) & (pts[:, 1] <= ref_y)
    pts = pts[mask]
    if pts.shape[0] == 0:
        return 0.0
    order = np.argsort(pts[:, 0], kind="mergesort")
    x = pts[order, 0]
    y = pts[order, 1]
    best = np.minimum.accumulate(y)
    prev_best = np.concatenate(([np.inf], best[:-1]))
    keep = y < prev_best
    xk = x[keep]
    yk = y[keep]
    widths = np.append(xk[1:], ref_x) - xk
    return float(np.sum(widths * (ref_y - yk)))
