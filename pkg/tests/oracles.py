"""Independent oracles for the Pareto primitives.

Deliberately naive: brute-force dominance filtering, rectangle union by
coordinate-compressed grid cells, and Monte-Carlo area estimation. These must
never share code with the kernels they check.
"""

import numpy as np


def dominates_bf(a, b) -> bool:
    a, b = tuple(a), tuple(b)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def brute_force_front(points) -> list[int]:
    """Indices of points not dominated by any other point."""
    pts = [tuple(p) for p in points]
    return [
        i
        for i, p in enumerate(pts)
        if not any(dominates_bf(q, p) for j, q in enumerate(pts) if j != i)
    ]


def rect_union_hv(points, ref) -> float:
    """Exact dominated area via coordinate-compressed grid cells.

    A cell counts iff some point lies at or below its lower-left corner in
    both coordinates; the union area is the sum of counted cell areas.
    """
    rx, ry = float(ref[0]), float(ref[1])
    pts = np.asarray(
        [(x, y) for x, y in points if x <= rx and y <= ry], dtype=np.float64
    )
    if pts.size == 0:
        return 0.0
    xs = np.unique(np.concatenate([pts[:, 0], [rx]]))
    ys = np.unique(np.concatenate([pts[:, 1], [ry]]))
    le_x = pts[:, 0][:, None] <= xs[:-1][None, :]  # (n, nx-1)
    le_y = pts[:, 1][:, None] <= ys[:-1][None, :]  # (n, ny-1)
    covered = np.einsum("pi,pj->ij", le_x, le_y) > 0
    areas = np.outer(np.diff(xs), np.diff(ys))
    return float(np.sum(areas[covered]))


def monte_carlo_hv(points, ref, n_samples: int, seed: int) -> tuple[float, float]:
    """(estimate, standard error) of the dominated area inside the ref box."""
    rx, ry = float(ref[0]), float(ref[1])
    pts = np.asarray(
        [(x, y) for x, y in points if x <= rx and y <= ry], dtype=np.float64
    )
    if pts.size == 0:
        return 0.0, 0.0
    lo = pts.min(axis=0)
    hi = np.array([rx, ry])
    box_area = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100_000
    remaining = n_samples
    while remaining > 0:
        m = min(chunk, remaining)
        samples = lo + rng.random((m, 2)) * (hi - lo)
        dominated = np.zeros(m, dtype=bool)
        for px, py in pts:
            dominated |= (samples[:, 0] >= px) & (samples[:, 1] >= py)
        hits += int(dominated.sum())
        remaining -= m
    frac = hits / n_samples
    estimate = frac * box_area
    se = box_area * np.sqrt(max(frac * (1 - frac), 1e-12) / n_samples)
    return estimate, se
