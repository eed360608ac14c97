"""Numba-compiled kernels for Pareto primitives.

Hot path: these run inside every intensification step and inside the metric
sweeps. Loop bodies mirror the numpy fallback arithmetic element for element.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def _nds_ranks(pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0]
    m = pts.shape[1]
    dom = np.zeros((n, n), dtype=np.bool_)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = True
            lt = False
            for k in range(m):
                if pts[i, k] > pts[j, k]:
                    le = False
                    break
                if pts[i, k] < pts[j, k]:
                    lt = True
            if le and lt:
                dom[i, j] = True
                counts[j] += 1
    ranks = np.full(n, -1, dtype=np.int64)
    rank = 0
    assigned = 0
    while assigned < n:
        front_size = 0
        for j in range(n):
            if ranks[j] == -1 and counts[j] == 0:
                ranks[j] = rank
                front_size += 1
        if front_size == 0:
            break
        for i in range(n):
            if ranks[i] == rank:
                for j in range(n):
                    if dom[i, j]:
                        counts[j] -= 1
        assigned += front_size
        rank += 1
    return ranks


@njit(cache=True)
def _crowding_distances(pts: np.ndarray) -> np.ndarray:
    n = pts.shape[0]
    m = pts.shape[1]
    dist = np.zeros(n, dtype=np.float64)
    for j in range(m):
        v = pts[:, j].copy()
        order = np.argsort(v, kind="mergesort")
        dist[order[0]] = np.inf
        dist[order[n - 1]] = np.inf
        vrange = v[order[n - 1]] - v[order[0]]
        if n > 2 and vrange > 0.0:
            for t in range(1, n - 1):
                dist[order[t]] += (v[order[t + 1]] - v[order[t - 1]]) / vrange
    return dist


@njit(cache=True)
def _hypervolume_2d(pts: np.ndarray, ref_x: float, ref_y: float) -> float:
    n = pts.shape[0]
    kept = 0
    for i in range(n):
        if pts[i, 0] <= ref_x and pts[i, 1] <= ref_y:
            kept += 1
    if kept == 0:
        return 0.0
    xs = np.empty(kept, dtype=np.float64)
    ys = np.empty(kept, dtype=np.float64)
    k = 0
    for i in range(n):
        if pts[i, 0] <= ref_x and pts[i, 1] <= ref_y:
            xs[k] = pts[i, 0]
            ys[k] = pts[i, 1]
            k += 1
    order = np.argsort(xs, kind="mergesort")
    hv = 0.0
    best_y = np.inf
    prev_x = 0.0
    prev_y = 0.0
    have_prev = False
    for t in range(kept):
        xi = xs[order[t]]
        yi = ys[order[t]]
        if yi < best_y:
            if have_prev:
                hv += (xi - prev_x) * (ref_y - prev_y)
            prev_x = xi
            prev_y = yi
            best_y = yi
            have_prev = True
    if have_prev:
        hv += (ref_x - prev_x) * (ref_y - prev_y)
    return hv


def nds_ranks(points: np.ndarray) -> np.ndarray:
    return _nds_ranks(np.ascontiguousarray(points, dtype=np.float64))


def crowding_distances(front: np.ndarray) -> np.ndarray:
    return _crowding_distances(np.ascontiguousarray(front, dtype=np.float64))


def hypervolume_2d(points: np.ndarray, ref_x: float, ref_y: float) -> float:
    return _hypervolume_2d(
        np.ascontiguousarray(points, dtype=np.float64), ref_x, ref_y
    )
