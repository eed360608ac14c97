"""Pareto primitives: dominance, non-dominated sorting, crowding distance,
2-D hypervolume, and the weaker dominance criterion for heterogeneous
evaluation levels.

Kernel backend selection: the numba-compiled kernels are used when numba
imports cleanly; set MOCAPO_DISABLE_NUMBA=1 to force the pure-numpy path.
Both paths are benchmarked against each other in benchmarks/bench_moo_kernels.py.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_FLAG = os.environ.get("MOCAPO_DISABLE_NUMBA", "").strip().lower()
if _FLAG in {"1", "true", "yes"}:
    from . import _numpy_kernels as _kernels
else:
    try:
        from . import _numba_kernels as _kernels
    except ImportError:  # numba missing or broken: degrade silently
        from . import _numpy_kernels as _kernels


def backend_name() -> str:
    """Active kernel backend: "numba" or "numpy"."""
    return _kernels.BACKEND


def _as_matrix(points: Iterable[Sequence[float]]) -> np.ndarray:
    rows = [tuple(p) for p in points]
    if not rows:
        raise ValueError("point set must be non-empty")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise ValueError(f"points have mixed dimensions: {sorted(dims)}")
    return np.asarray(rows, dtype=np.float64)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff a <= b component-wise and a < b in at least one component.

    Positive infinity is admitted so the all-infinity initializer of the
    intensification loop compares as worst-possible.
    """
    av = tuple(a)
    bv = tuple(b)
    if len(av) != len(bv):
        raise ValueError(f"dimension mismatch: {len(av)} vs {len(bv)}")
    if any(math.isnan(v) for v in av + bv):
        raise ValueError("objective values must not be NaN")
    return all(x <= y for x, y in zip(av, bv)) and any(
        x < y for x, y in zip(av, bv)
    )


@dataclass(frozen=True)
class FrontPartition:
    """Successive non-dominated fronts over point indices.

    Front 0 is the non-dominated set; within each front the input order is
    preserved. Fronts partition the input index set.
    """

    fronts: tuple[tuple[int, ...], ...]

    def rank_of(self, index: int) -> int:
        for r, front in enumerate(self.fronts):
            if index in front:
                return r
        raise KeyError(index)

    @property
    def first(self) -> tuple[int, ...]:
        return self.fronts[0]


def nds_ranks(points: Iterable[Sequence[float]]) -> np.ndarray:
    """Front index per point (0 = non-dominated)."""
    return _kernels.nds_ranks(_as_matrix(points))


def non_dominated_sort(points: Iterable[Sequence[float]]) -> FrontPartition:
    ranks = nds_ranks(points)
    n_fronts = int(ranks.max()) + 1
    fronts = tuple(
        tuple(int(i) for i in np.flatnonzero(ranks == r)) for r in range(n_fronts)
    )
    return FrontPartition(fronts=fronts)


def non_dominated_indices(points: Iterable[Sequence[float]]) -> list[int]:
    """Indices of the non-dominated points, preserving input order."""
    ranks = nds_ranks(points)
    return [int(i) for i in np.flatnonzero(ranks == 0)]


def crowding_distance(front: Iterable[Sequence[float]]) -> list[float]:
    """Crowding distance of each point within one front (input order)."""
    return [float(v) for v in _kernels.crowding_distances(_as_matrix(front))]


def hypervolume_2d(
    front: Iterable[Sequence[float]], ref: Sequence[float]
) -> float:
    """Area dominated by the front within the box capped at the reference point.

    Points not weakly dominated by ref are excluded; a point on the box
    boundary contributes zero area.
    """
    rv = tuple(ref)
    if len(rv) != 2:
        raise ValueError("reference point must be 2-D")
    rows = [tuple(p) for p in front]
    if not rows:
        return 0.0
    mat = _as_matrix(rows)
    if mat.shape[1] != 2:
        raise ValueError("hypervolume_2d expects 2-D points")
    return _kernels.hypervolume_2d(mat, float(rv[0]), float(rv[1]))


def weakly_dominates_on_subset(
    blocks_more: Iterable[int],
    blocks_less: Iterable[int],
    restricted_more: Sequence[float],
    restricted_less: Sequence[float],
) -> bool:
    """Weaker dominance across evaluation levels.

    The better-evaluated candidate wins iff its objective vector restricted to
    the lesser-evaluated candidate's blocks Pareto-dominates the other's.
    Callers supply the two vectors already restricted to the shared blocks;
    the strict block-subset precondition is enforced here.
    """
    more = frozenset(blocks_more)
    less = frozenset(blocks_less)
    if not less < more:
        raise ValueError(
            "weaker dominance requires the lesser-evaluated block set to be a "
            "strict subset of the better-evaluated one"
        )
    return dominates(restricted_more, restricted_less)
