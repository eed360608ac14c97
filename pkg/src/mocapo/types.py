"""Shared domain types: prompts, evaluation records, run history, task bundles.

Everything here is either an immutable value object or (for RunHistory) a
single-writer append-only ledger. No optimization logic lives in this module.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence


def content_hash(*parts: object) -> str:
    """Stable 16-hex-char digest of a JSON-serializable structure."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class FewShotExample:
    """One worked example: an instance rendering plus its demonstrated output."""

    input: str
    output: str

    def __post_init__(self) -> None:
        if not self.input:
            raise ValueError("few-shot example input must be non-empty")
        if not self.output:
            raise ValueError("few-shot example output must be non-empty")


@dataclass(frozen=True)
class Prompt:
    """Search genome: an instruction plus an ordered tuple of few-shot examples.

    The id is a content hash of (instruction, shots), so prompts that render
    identically always share an id and duplicate detection is O(1).
    """

    instruction: str
    few_shots: tuple[FewShotExample, ...] = ()
    id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "few_shots", tuple(self.few_shots))
        derived = content_hash(
            self.instruction, [[s.input, s.output] for s in self.few_shots]
        )
        object.__setattr__(self, "id", derived)

    @property
    def num_shots(self) -> int:
        return len(self.few_shots)


def render_prompt(prompt: Prompt, instance_input: str) -> str:
    """Render a prompt against one instance input.

    Deterministic concatenation: instruction, each few-shot example as an
    Input/Output pair in order, then the query instance with a trailing
    "Output:" cue. Identical inputs yield byte-identical renderings.
    """
    parts = [prompt.instruction]
    for shot in prompt.few_shots:
        parts.append(f"Input: {shot.input}\nOutput: {shot.output}")
    parts.append(f"Input: {instance_input}\nOutput:")
    return "\n\n".join(parts)


@dataclass(frozen=True)
class ObjectiveVector:
    """m-dimensional objective value under minimization convention.

    Entries are finite, except for the all-infinity sentinel used as the
    initializer of the intensification comparison loop.
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("objective vector must have at least one entry")
        if any(math.isnan(v) for v in vals):
            raise ValueError("objective vector entries must not be NaN")
        if any(math.isinf(v) for v in vals) and not all(
            math.isinf(v) and v > 0 for v in vals
        ):
            raise ValueError(
                "infinite entries are only allowed as the all-infinity sentinel"
            )

    @classmethod
    def sentinel(cls, dim: int = 2) -> "ObjectiveVector":
        return cls(values=(math.inf,) * dim)

    @property
    def is_sentinel(self) -> bool:
        return all(math.isinf(v) for v in self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]


@dataclass(frozen=True)
class Block:
    """One fixed-size cell of the development-set partition."""

    index: int
    instance_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        if not self.instance_ids:
            raise ValueError("block must contain at least one instance")


def partition_blocks(instance_ids: Sequence[str], block_size: int) -> list[Block]:
    """Chunk instance ids into consecutive blocks of exactly block_size.

    Trailing instances that do not fill a complete block are dropped so every
    block carries equal weight in objective estimates.
    """
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    n_full = len(instance_ids) // block_size
    if n_full == 0:
        raise ValueError(
            f"dataset of {len(instance_ids)} instances yields no full block "
            f"of size {block_size}"
        )
    return [
        Block(index=i, instance_ids=tuple(instance_ids[i * block_size : (i + 1) * block_size]))
        for i in range(n_full)
    ]


@dataclass(frozen=True)
class CostWeights:
    """Price per token for input and output, in USD per 1e6 tokens.

    Zero weights are allowed (single-objective ablation).
    """

    w_in: float
    w_out: float

    def __post_init__(self) -> None:
        if self.w_in < 0 or self.w_out < 0:
            raise ValueError("cost weights must be non-negative")


@dataclass(frozen=True)
class InstanceEval:
    """Outcome of one evaluation call on one instance."""

    instance_id: str
    score: float
    tok_in: int
    tok_out: int
    raw_output: str
    tok_estimated: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.tok_in < 0 or self.tok_out < 0:
            raise ValueError("token counts must be non-negative")


@dataclass(frozen=True)
class EvalRecord:
    """All per-instance outcomes of one prompt on one block."""

    prompt_id: str
    block_index: int
    entries: tuple[InstanceEval, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("evaluation record must contain at least one entry")

    @property
    def tokens(self) -> int:
        return sum(e.tok_in + e.tok_out for e in self.entries)


class RunHistory:
    """Append-only ledger of evaluation records keyed by (prompt_id, block_index).

    Single source of truth for every objective estimate. One record per key;
    re-evaluating an existing pair is a caller bug and raises. token_meter is
    the cumulative token count of all recorded per-instance entries and is
    monotonically non-decreasing.
    """

    def __init__(self) -> None:
        self._records: dict[tuple[str, int], EvalRecord] = {}
        self._blocks_by_prompt: dict[str, set[int]] = {}
        self.token_meter: int = 0

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._records

    def add(self, record: EvalRecord) -> None:
        key = (record.prompt_id, record.block_index)
        if key in self._records:
            raise ValueError(f"record for {key} already exists; history is append-only")
        self._records[key] = record
        self._blocks_by_prompt.setdefault(record.prompt_id, set()).add(
            record.block_index
        )
        self.token_meter += record.tokens

    def get(self, prompt_id: str, block_index: int) -> EvalRecord:
        return self._records[(prompt_id, block_index)]

    def evaluated_blocks(self, prompt_id: str) -> frozenset[int]:
        return frozenset(self._blocks_by_prompt.get(prompt_id, ()))

    def prompt_ids(self) -> list[str]:
        """Distinct prompt ids with at least one record, in first-seen order."""
        return list(self._blocks_by_prompt.keys())

    def lookup(
        self, prompt_id: str, block_indices: Iterable[int]
    ) -> tuple[list[EvalRecord], list[int]]:
        """Return (records, missing_blocks); never fabricates values."""
        records: list[EvalRecord] = []
        missing: list[int] = []
        for b in block_indices:
            rec = self._records.get((prompt_id, b))
            if rec is None:
                missing.append(b)
            else:
                records.append(rec)
        return records, missing

    def iter_records(self) -> Iterable[EvalRecord]:
        """Records in insertion order."""
        return iter(self._records.values())


@dataclass(frozen=True)
class TaskInstance:
    id: str
    input: str
    label: str


ScorerName = str  # "exact-match-marker" | "reward-function-hook"

SCORERS: tuple[str, ...] = ("exact-match-marker", "reward-function-hook")


@dataclass(frozen=True)
class TaskSpec:
    """A task bundle: description, scorer choice, and the three instance splits."""

    name: str
    task_description: str
    scorer: ScorerName
    dev: tuple[TaskInstance, ...]
    shots: tuple[TaskInstance, ...]
    test: tuple[TaskInstance, ...]

    def __post_init__(self) -> None:
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}; expected one of {SCORERS}")
        object.__setattr__(self, "dev", tuple(self.dev))
        object.__setattr__(self, "shots", tuple(self.shots))
        object.__setattr__(self, "test", tuple(self.test))
        ids = [i.id for split in (self.dev, self.shots, self.test) for i in split]
        if len(set(ids)) != len(ids):
            raise ValueError("dev, shots and test splits must be pairwise disjoint")

    def instance(self, instance_id: str) -> TaskInstance:
        by_id = self._index()
        return by_id[instance_id]

    def _index(self) -> dict[str, TaskInstance]:
        cached = getattr(self, "_by_id", None)
        if cached is None:
            cached = {i.id: i for split in (self.dev, self.shots, self.test) for i in split}
            object.__setattr__(self, "_by_id", cached)
        return cached

    def labels(self) -> list[str]:
        """Distinct labels across all splits, in first-seen order."""
        seen: dict[str, None] = {}
        for split in (self.dev, self.shots, self.test):
            for inst in split:
                seen.setdefault(inst.label, None)
        return list(seen)


RewardFn = Callable[[str, "str | None", str], float]


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the evolutionary search and its budget."""

    mu: int = 10
    block_size: int = 30
    iterations: int | None = None
    crossovers: int = 4
    max_shots: int = 5
    weights: CostWeights = field(default_factory=lambda: CostWeights(0.08, 0.32))
    budget_tokens: int = 7_500_000
    step_cap: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mu < 2:
            raise ValueError("mu must be >= 2")
        if self.crossovers < 1:
            raise ValueError("crossovers must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.max_shots < 0:
            raise ValueError("max_shots must be >= 0")
        if self.budget_tokens < 0:
            raise ValueError("budget_tokens must be >= 0")
        if self.step_cap < 0:
            raise ValueError("step_cap must be >= 0")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be >= 0 when set")
