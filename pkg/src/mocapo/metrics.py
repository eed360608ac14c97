"""Post-hoc multi-objective generalization evaluation of run archives.

Covers global min-max normalization, optimistic/pessimistic front splitting
with the approximation gap, the noisy R2 selection-robustness metric under
Chebychev utilities, empirical attainment surfaces, and per-step trajectory
extraction (time-to-80%, first-iteration budget).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import moo
from .archive import RunArchive

DEFAULT_REFERENCE = (1.1, 1.1)
DEFAULT_N_PREF = 500

Vector = Sequence[float]


@dataclass(frozen=True)
class NormalizationBounds:
    """Per-objective (min, max) pairs for global min-max normalization."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.mins) != len(self.maxs):
            raise ValueError("mins and maxs must have equal length")
        if any(lo > hi for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("each min must not exceed its max")

    @classmethod
    def from_vectors(cls, vectors: Iterable[Vector]) -> "NormalizationBounds":
        mat = np.asarray([tuple(v) for v in vectors], dtype=np.float64)
        if mat.size == 0:
            raise ValueError("cannot derive bounds from an empty vector set")
        return cls(
            mins=tuple(float(v) for v in mat.min(axis=0)),
            maxs=tuple(float(v) for v in mat.max(axis=0)),
        )

    def normalize(self, vector: Vector) -> tuple[float, ...]:
        out = []
        for v, lo, hi in zip(vector, self.mins, self.maxs):
            out.append((float(v) - lo) / (hi - lo) if hi > lo else 0.0)
        return tuple(out)

    def normalize_map(self, vectors: Mapping[str, Vector]) -> dict[str, tuple[float, ...]]:
        return {k: self.normalize(v) for k, v in vectors.items()}


def bounds_from_archives(archives: Sequence[RunArchive]) -> NormalizationBounds:
    """Bounds over the union of final-front dev and test vectors of all archives.

    A single archive simply uses its own union.
    """
    vectors: list[Vector] = []
    for archive in archives:
        vectors.extend(archive.final_front["vectors"].values())
        if archive.test_vectors:
            vectors.extend(archive.test_vectors.values())
    return NormalizationBounds.from_vectors(vectors)


def optimistic_pessimistic_split(
    member_ids: Sequence[str], test_vectors: Mapping[str, Vector]
) -> tuple[list[str], list[str]]:
    """Split a dev front by its test vectors.

    Optimistic: members whose test vectors stay non-dominated within the set.
    Pessimistic: members whose test vectors dominate no other member's.
    """
    ids = list(member_ids)
    if not ids:
        raise ValueError("front must be non-empty")
    vecs = [tuple(test_vectors[pid]) for pid in ids]
    n = len(ids)
    dominated = [False] * n
    dominates_any = [False] * n
    for i in range(n):
        for j in range(n):
            if i != j and moo.dominates(vecs[i], vecs[j]):
                dominated[j] = True
                dominates_any[i] = True
    optimistic = [ids[i] for i in range(n) if not dominated[i]]
    pessimistic = [ids[i] for i in range(n) if not dominates_any[i]]
    return optimistic, pessimistic


def hypervolume_of(
    member_ids: Sequence[str],
    vectors: Mapping[str, Vector],
    bounds: NormalizationBounds,
    ref: Vector = DEFAULT_REFERENCE,
) -> float:
    if not member_ids:
        return 0.0
    points = [bounds.normalize(vectors[pid]) for pid in member_ids]
    return moo.hypervolume_2d(points, ref)


def approximation_gap(
    optimistic_ids: Sequence[str],
    pessimistic_ids: Sequence[str],
    test_vectors: Mapping[str, Vector],
    bounds: NormalizationBounds,
    ref: Vector = DEFAULT_REFERENCE,
) -> float:
    """HV(optimistic) - HV(pessimistic); non-negative by construction."""
    hv_opt = hypervolume_of(optimistic_ids, test_vectors, bounds, ref)
    hv_pes = hypervolume_of(pessimistic_ids, test_vectors, bounds, ref)
    return hv_opt - hv_pes


def sample_preferences(n_pref: int, seed: int) -> np.ndarray:
    """Simplex-uniform 2-D preference vectors (lam, 1 - lam)."""
    if n_pref < 1:
        raise ValueError("n_pref must be >= 1")
    rng = np.random.default_rng(seed)
    lam = rng.random(n_pref)
    return np.column_stack([lam, 1.0 - lam])


def validate_preferences(preferences: np.ndarray) -> np.ndarray:
    """Check simplex membership of a preference matrix (rows sum to 1)."""
    lams = np.asarray(preferences, dtype=np.float64)
    if lams.ndim != 2 or lams.shape[0] < 1:
        raise ValueError("preferences must be a non-empty matrix")
    if (lams < 0).any():
        raise ValueError("preference weights must be non-negative")
    if np.abs(lams.sum(axis=1) - 1.0).max() > 1e-12:
        raise ValueError("each preference vector must sum to 1 within 1e-12")
    return lams


def noisy_r2_samples(
    dev_vectors: Mapping[str, Vector],
    test_vectors: Mapping[str, Vector],
    bounds: NormalizationBounds,
    n_pref: int = DEFAULT_N_PREF,
    seed: int = 0,
    preferences: np.ndarray | None = None,
) -> np.ndarray:
    """Per-preference test-side utilities behind the noisy R2 mean.

    For each preference vector, the member minimizing the dev-side Chebychev
    utility U(f, lam) = max_j lam_j * f_j (normalized space, ideal point at
    the origin) is selected and its test-side utility returned. Argmin ties
    resolve to the lowest prompt id. An explicit preference matrix overrides
    the seeded sampling.
    """
    ids = sorted(dev_vectors)
    if not ids:
        raise ValueError("front must be non-empty")
    if set(ids) - set(test_vectors):
        raise ValueError("every dev-front member needs a test vector")
    dev = np.asarray([bounds.normalize(dev_vectors[pid]) for pid in ids])
    test = np.asarray([bounds.normalize(test_vectors[pid]) for pid in ids])
    if dev.shape[1] != 2:
        raise ValueError("noisy R2 is implemented for 2-D objectives")
    if preferences is None:
        lams = sample_preferences(n_pref, seed)
    else:
        lams = validate_preferences(preferences)
    dev_utility = np.max(lams[:, None, :] * dev[None, :, :], axis=2)
    picks = np.argmin(dev_utility, axis=1)
    return np.max(lams * test[picks], axis=1)


def noisy_r2(
    dev_vectors: Mapping[str, Vector],
    test_vectors: Mapping[str, Vector],
    bounds: NormalizationBounds,
    n_pref: int = DEFAULT_N_PREF,
    seed: int = 0,
    preferences: np.ndarray | None = None,
) -> float:
    """Mean test-set Chebychev utility of the solutions selected on dev."""
    return float(
        np.mean(
            noisy_r2_samples(dev_vectors, test_vectors, bounds, n_pref, seed, preferences)
        )
    )


def eas_levels(num_runs: int) -> list[int]:
    """Best, median, worst attainment levels: {1, ceil(S/2), S}."""
    return sorted({1, math.ceil(num_runs / 2), num_runs})


def attainment_surface(
    fronts: Sequence[Iterable[Vector]], level: int
) -> np.ndarray:
    """Boundary of the region attained by at least `level` of the runs.

    Returns staircase vertices (x, y) over the merged x-grid of all front
    points: at each x the level-th smallest per-run attained y. Consecutive
    equal-y grid points are compressed to the leftmost vertex.
    """
    num_runs = len(fronts)
    if not 1 <= level <= num_runs:
        raise ValueError(f"level must be in [1, {num_runs}]")
    arrays = []
    for front in fronts:
        arr = np.asarray([tuple(p) for p in front], dtype=np.float64)
        if arr.size == 0:
            raise ValueError("fronts must be non-empty")
        arrays.append(arr.reshape(-1, 2))
    xs = np.unique(np.concatenate([a[:, 0] for a in arrays]))
    attained = np.full((num_runs, xs.size), np.inf)
    for s, arr in enumerate(arrays):
        order = np.argsort(arr[:, 0], kind="mergesort")
        front_x = arr[order, 0]
        front_y = np.minimum.accumulate(arr[order, 1])
        idx = np.searchsorted(front_x, xs, side="right") - 1
        valid = idx >= 0
        attained[s, valid] = front_y[idx[valid]]
    level_y = np.sort(attained, axis=0)[level - 1, :]
    finite = np.isfinite(level_y)
    xs, level_y = xs[finite], level_y[finite]
    if xs.size == 0:
        return np.empty((0, 2))
    keep = np.concatenate(([True], level_y[1:] < level_y[:-1]))
    return np.column_stack([xs[keep], level_y[keep]])


@dataclass(frozen=True)
class TrajectoryResult:
    """Per-step metric trace plus the efficiency summary statistics."""

    points: tuple[tuple[int, float], ...]  # (tokens consumed, metric value)
    steps: tuple[int, ...]
    tt80: float | None  # budget fraction reaching 80% of final pessimistic HV
    iter1: int | None  # tokens consumed when step 1 completed

    @property
    def final_value(self) -> float:
        return self.points[-1][1]


TRAJECTORY_METRICS = ("nr2", "pessimistic_hv", "optimistic_hv")


def trajectory(
    archive: RunArchive,
    metric: str,
    bounds: NormalizationBounds,
    ref: Vector = DEFAULT_REFERENCE,
    n_pref: int = DEFAULT_N_PREF,
    seed: int = 0,
) -> TrajectoryResult:
    """Recompute a metric on every per-step incumbent snapshot.

    Snapshots whose members all carry archived test vectors are scored on
    test; otherwise the dev-side vectors stand in for both (in-sample
    fallback). TT80 is reported for the hypervolume metrics only.
    """
    if metric not in TRAJECTORY_METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {TRAJECTORY_METRICS}")
    if not archive.snapshots:
        raise ValueError("archive contains no snapshots")
    test_map = archive.test_vectors or {}
    points: list[tuple[int, float]] = []
    steps: list[int] = []
    iter1: int | None = None
    for snap in archive.snapshots:
        ids = list(snap["incumbents"])
        dev = {pid: tuple(snap["vectors"][pid]) for pid in ids}
        if ids and all(pid in test_map for pid in ids):
            test = {pid: tuple(test_map[pid]) for pid in ids}
        else:
            test = dev
        if metric == "nr2":
            value = noisy_r2(dev, test, bounds, n_pref, seed)
        else:
            optimistic, pessimistic = optimistic_pessimistic_split(ids, test)
            members = optimistic if metric == "optimistic_hv" else pessimistic
            value = hypervolume_of(members, test, bounds, ref)
        points.append((int(snap["tokens"]), value))
        steps.append(int(snap["step"]))
        if iter1 is None and snap["step"] >= 1:
            iter1 = int(snap["tokens"])
    tt80 = None
    if metric in ("pessimistic_hv", "optimistic_hv"):
        budget = int(archive.budget["tokens"])
        threshold = 0.8 * points[-1][1]
        for tokens, value in points:
            if value >= threshold:
                tt80 = tokens / budget if budget > 0 else 0.0
                break
    return TrajectoryResult(
        points=tuple(points), steps=tuple(steps), tt80=tt80, iter1=iter1
    )


@dataclass(frozen=True)
class ArchiveReport:
    """Headline generalization metrics of one archive."""

    nr2: float
    hv_optimistic: float
    hv_pessimistic: float
    gap: float


def archive_report(
    archive: RunArchive,
    bounds: NormalizationBounds,
    ref: Vector = DEFAULT_REFERENCE,
    n_pref: int = DEFAULT_N_PREF,
    seed: int = 0,
) -> ArchiveReport:
    """nR2, optimistic/pessimistic HV and gap for one archive's final front.

    Archives without test vectors are scored in-sample (test = dev), which
    makes the gap identically zero.
    """
    ids = list(archive.final_front["ids"])
    dev = {pid: tuple(v) for pid, v in archive.final_front["vectors"].items()}
    if archive.test_vectors and all(pid in archive.test_vectors for pid in ids):
        test = {pid: tuple(archive.test_vectors[pid]) for pid in ids}
    else:
        test = dev
    optimistic, pessimistic = optimistic_pessimistic_split(ids, test)
    hv_opt = hypervolume_of(optimistic, test, bounds, ref)
    hv_pes = hypervolume_of(pessimistic, test, bounds, ref)
    return ArchiveReport(
        nr2=noisy_r2(dev, test, bounds, n_pref, seed),
        hv_optimistic=hv_opt,
        hv_pessimistic=hv_pes,
        gap=hv_opt - hv_pes,
    )


def optimistic_test_front(archive: RunArchive) -> list[tuple[float, ...]]:
    """Test-set vectors of the archive's optimistic front (EAS input).

    Falls back to the dev front when the archive has no test vectors.
    """
    ids = list(archive.final_front["ids"])
    if archive.test_vectors and all(pid in archive.test_vectors for pid in ids):
        vectors = {pid: tuple(archive.test_vectors[pid]) for pid in ids}
    else:
        vectors = {pid: tuple(v) for pid, v in archive.final_front["vectors"].items()}
    optimistic, _ = optimistic_pessimistic_split(ids, vectors)
    return [vectors[pid] for pid in optimistic]
