"""State shared by both optimizer loops: engine context, online objective
normalization, per-step snapshots, and the run result container."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..backends.base import CallParams, CompletionBackend
from ..evaluation import BudgetMeter, Evaluator, objective_values, shared_evaluated_blocks
from ..operators import MetaPromptTemplates
from ..types import Block, ObjectiveVector, OptimizerConfig, Prompt, RunHistory, TaskSpec

Observer = Callable[[str, dict], None]


class ObjectiveNormalizer:
    """Min-max bounds over every objective value seen during the run so far.

    A degenerate coordinate (min == max) normalizes to 0 so it contributes
    nothing to distances.
    """

    def __init__(self, dim: int = 2) -> None:
        self.dim = dim
        self.mins: list[float] | None = None
        self.maxs: list[float] | None = None

    def observe(self, vector: Sequence[float]) -> None:
        values = [float(v) for v in vector]
        if any(math.isinf(v) for v in values):
            return
        if self.mins is None:
            self.mins = list(values)
            self.maxs = list(values)
            return
        for i, v in enumerate(values):
            if v < self.mins[i]:
                self.mins[i] = v
            if v > self.maxs[i]:
                self.maxs[i] = v

    def normalize(self, vector: Sequence[float]) -> tuple[float, ...]:
        if self.mins is None or self.maxs is None:
            return tuple(0.0 for _ in vector)
        out = []
        for v, lo, hi in zip(vector, self.mins, self.maxs):
            out.append((float(v) - lo) / (hi - lo) if hi > lo else 0.0)
        return tuple(out)


@dataclass
class EngineContext:
    """Everything an optimizer iteration touches, bundled for the helpers."""

    task: TaskSpec
    config: OptimizerConfig
    eval_backend: CompletionBackend
    meta_backend: CompletionBackend
    templates: MetaPromptTemplates | None
    params: CallParams
    blocks: list[Block]
    history: RunHistory
    meter: BudgetMeter
    rng: random.Random
    normalizer: ObjectiveNormalizer = field(default_factory=ObjectiveNormalizer)
    prompts: dict[str, Prompt] = field(default_factory=dict)
    observer: Observer | None = None

    def __post_init__(self) -> None:
        self.blocks_by_index = {b.index: b for b in self.blocks}
        self.evaluator = Evaluator(
            task=self.task, backend=self.eval_backend, params=self.params
        )

    def register(self, prompt: Prompt) -> None:
        self.prompts.setdefault(prompt.id, prompt)

    def objectives(self, prompt_id: str, blocks: Iterable[int]) -> ObjectiveVector:
        vector = objective_values(prompt_id, self.history, blocks, self.config.weights)
        self.normalizer.observe(vector)
        return vector

    def evaluate_pair(self, prompt: Prompt, block_index: int, enforce: bool = True) -> None:
        self.evaluator.evaluate(
            [prompt],
            [self.blocks_by_index[block_index]],
            self.history,
            meter=self.meter,
            enforce_budget=enforce,
        )

    def emit(self, event: str, **payload) -> None:
        if self.observer is not None:
            self.observer(event, payload)


def make_snapshot(
    ctx: EngineContext,
    step: int,
    front_ids: Sequence[str],
    basis: Iterable[int],
    partial: bool = False,
) -> dict:
    basis_sorted = sorted(basis)
    vectors = {
        pid: list(ctx.objectives(pid, basis_sorted).values) for pid in front_ids
    }
    return {
        "step": step,
        "tokens": ctx.meter.consumed,
        "meta_tokens": ctx.meter.meta_consumed,
        "incumbents": list(front_ids),
        "vectors": vectors,
        "basis": basis_sorted,
        "partial": partial,
    }


@dataclass
class RunResult:
    """Full outcome of one optimization run, ready for archiving."""

    optimizer: str
    task: TaskSpec
    config: OptimizerConfig
    blocks: list[Block]
    history: RunHistory
    meter: BudgetMeter
    population: list[Prompt]
    front_ids: list[str]
    front_vectors: dict[str, tuple[float, ...]]
    front_basis: list[int]
    snapshots: list[dict]
    prompts: dict[str, Prompt]
    stopped_early: bool

    def front_prompts(self) -> list[Prompt]:
        return [self.prompts[pid] for pid in self.front_ids]


def finalize_front(
    ctx: EngineContext, front_ids: Sequence[str]
) -> tuple[dict[str, tuple[float, ...]], list[int]]:
    basis = sorted(shared_evaluated_blocks(front_ids, ctx.history))
    vectors = {pid: tuple(ctx.objectives(pid, basis).values) for pid in front_ids}
    return vectors, basis


def dedup_population(prompts: Sequence[Prompt]) -> list[Prompt]:
    seen: set[str] = set()
    out = []
    for p in prompts:
        if p.id not in seen:
            seen.add(p.id)
            out.append(p)
    return out
