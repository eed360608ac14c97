"""Turning prompts into objective vectors.

Block-wise scoring through the evaluation LLM, the dual-weighted token cost
objective, aggregation over block subsets, and budget enforcement. History
writes are all-or-nothing per (prompt, block) pair so objective estimates
stay unbiased; the budget is checked between block evaluations, never
mid-block, so an evaluation in flight always completes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .backends.base import CallParams, ChatRequest, CompletionBackend, extract_marked_answer
from .types import (
    Block,
    CostWeights,
    EvalRecord,
    InstanceEval,
    ObjectiveVector,
    Prompt,
    RunHistory,
    TaskInstance,
    TaskSpec,
    render_prompt,
)


class BudgetExhausted(RuntimeError):
    """Raised when a new evaluation would start past the budget or step cap."""

    def __init__(self, meter: "BudgetMeter") -> None:
        super().__init__(
            f"budget exhausted: {meter.consumed}/{meter.budget} tokens, "
            f"step {meter.step_count}/{meter.step_cap}"
        )


class MissingBlocksError(LookupError):
    """An objective was requested over blocks the history has no records for."""

    def __init__(self, prompt_id: str, missing: Sequence[int]) -> None:
        self.prompt_id = prompt_id
        self.missing = tuple(missing)
        super().__init__(f"prompt {prompt_id}: no records for blocks {sorted(missing)}")


@dataclass
class BudgetMeter:
    """Evaluation-LLM token budget plus the optimizer step cap.

    Meta-LLM tokens are metered separately and excluded from the stop rule:
    the budget constrains what the evaluation LLM consumes.
    """

    budget: int = 7_500_000
    step_cap: int = 2000
    consumed: int = 0
    step_count: int = 0
    meta_consumed: int = 0

    def add_eval(self, tokens: int) -> None:
        self.consumed += tokens

    def add_meta(self, tokens: int) -> None:
        self.meta_consumed += tokens


def check_budget(meter: BudgetMeter) -> bool:
    """True when the run must stop (budget consumed or step cap reached)."""
    return meter.consumed >= meter.budget or meter.step_count >= meter.step_cap


RewardFn = Callable[[str, "str | None", str], float]

_REWARD_FNS: dict[str, RewardFn] = {}


def register_reward_fn(task_name: str, fn: RewardFn) -> None:
    """Register the scoring callback for a reward-function-hook task.

    The callback receives (raw_output, extracted_answer, gold_label) and must
    return a score in [0, 1]; the engine treats it as opaque.
    """
    _REWARD_FNS[task_name] = fn


def score_output(task: TaskSpec, instance: TaskInstance, output_text: str) -> float:
    """Point-wise score of one raw model output against one instance."""
    answer = extract_marked_answer(output_text)
    if task.scorer == "exact-match-marker":
        # A missing marker scores 0, penalizing format-breaking prompts.
        return 1.0 if answer is not None and answer == instance.label.strip() else 0.0
    fn = _REWARD_FNS.get(task.name)
    if fn is None:
        raise KeyError(
            f"no reward function registered for task {task.name!r}; "
            "call register_reward_fn first"
        )
    value = float(fn(output_text, answer, instance.label))
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"reward function returned {value}, outside [0, 1]")
    return value


@dataclass
class Evaluator:
    """Executes block evaluations against one backend with caching via history."""

    task: TaskSpec
    backend: CompletionBackend
    params: CallParams = field(default_factory=CallParams)

    def _call_one(self, prompt: Prompt, instance: TaskInstance) -> InstanceEval:
        rendered = render_prompt(prompt, instance.input)
        request = ChatRequest(
            model=self.params.model,
            messages=(("user", rendered),),
            max_output_tokens=self.params.max_output_tokens,
            temperature=self.params.eval_temperature,
            seed=self.params.seed,
        )
        response = self.backend.complete(request)
        score = score_output(self.task, instance, response.text)
        return InstanceEval(
            instance_id=instance.id,
            score=score,
            tok_in=response.tok_in,
            tok_out=response.tok_out,
            raw_output=response.text,
            tok_estimated=response.tok_estimated,
        )

    def _run_block(self, prompt: Prompt, block: Block) -> EvalRecord:
        instances = [self.task.instance(iid) for iid in block.instance_ids]
        if self.params.concurrency > 1:
            with ThreadPoolExecutor(max_workers=self.params.concurrency) as pool:
                entries = list(pool.map(lambda i: self._call_one(prompt, i), instances))
        else:
            entries = [self._call_one(prompt, i) for i in instances]
        return EvalRecord(
            prompt_id=prompt.id, block_index=block.index, entries=tuple(entries)
        )

    def evaluate(
        self,
        prompts: Sequence[Prompt],
        blocks: Sequence[Block],
        history: RunHistory,
        meter: BudgetMeter | None = None,
        enforce_budget: bool = False,
    ) -> RunHistory:
        """Evaluate every missing (prompt, block) pair; cached pairs untouched.

        With enforce_budget, the meter is checked before each pair and
        BudgetExhausted is raised instead of starting a new one. A pair's
        entries are committed atomically; a failing backend call aborts the
        whole pair without touching history.
        """
        for prompt in prompts:
            for block in blocks:
                if (prompt.id, block.index) in history:
                    continue
                if enforce_budget and meter is not None and check_budget(meter):
                    raise BudgetExhausted(meter)
                record = self._run_block(prompt, block)
                history.add(record)
                if meter is not None:
                    meter.add_eval(record.tokens)
        return history


def objective_values(
    prompt_id: str,
    history: RunHistory,
    blocks: Iterable[int],
    weights: CostWeights,
) -> ObjectiveVector:
    """(negated mean score, dual-weighted mean token cost) over the given blocks.

    The cost term is USD per 1e6 calls with the prompt. Blocks are aggregated
    in sorted order, so the result is permutation-invariant bit for bit.
    """
    indices = sorted(set(blocks))
    records, missing = history.lookup(prompt_id, indices)
    if missing:
        raise MissingBlocksError(prompt_id, missing)
    total_score = 0.0
    total_in = 0
    total_out = 0
    count = 0
    for record in records:
        for entry in record.entries:
            total_score += entry.score
            total_in += entry.tok_in
            total_out += entry.tok_out
            count += 1
    f1 = -(total_score / count)
    f2 = weights.w_in * (total_in / count) + weights.w_out * (total_out / count)
    return ObjectiveVector(values=(f1, f2))


def shared_evaluated_blocks(prompt_ids: Iterable[str], history: RunHistory) -> frozenset[int]:
    """Intersection of the evaluated block sets of the given prompts."""
    result: frozenset[int] | None = None
    for pid in prompt_ids:
        blocks = history.evaluated_blocks(pid)
        result = blocks if result is None else result & blocks
    if result is None:
        raise ValueError("at least one prompt id is required")
    return result


def evaluate_on_instances(
    prompt: Prompt,
    instances: Sequence[TaskInstance],
    task: TaskSpec,
    backend: CompletionBackend,
    weights: CostWeights,
    params: CallParams,
) -> tuple[ObjectiveVector, float, float]:
    """Objective vector of a prompt over an explicit instance list (test eval).

    Returns (vector, mean input tokens, mean output tokens); records nothing
    in any history.
    """
    if not instances:
        raise ValueError("instance list must be non-empty")
    evaluator = Evaluator(task=task, backend=backend, params=params)
    if params.concurrency > 1:
        with ThreadPoolExecutor(max_workers=params.concurrency) as pool:
            entries = list(pool.map(lambda i: evaluator._call_one(prompt, i), instances))
    else:
        entries = [evaluator._call_one(prompt, i) for i in instances]
    n = len(entries)
    mean_in = sum(e.tok_in for e in entries) / n
    mean_out = sum(e.tok_out for e in entries) / n
    f1 = -(sum(e.score for e in entries) / n)
    f2 = weights.w_in * mean_in + weights.w_out * mean_out
    return ObjectiveVector(values=(f1, f2)), mean_in, mean_out
