"""Evolutionary machinery: population initialization with few-shot creation,
meta-LLM crossover and mutation, and binary tournament parent selection that
handles heterogeneous evaluation levels.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import moo
from .backends.base import CallParams, ChatRequest, CompletionBackend, extract_marked_answer
from .evaluation import (
    BudgetMeter,
    BudgetExhausted,
    check_budget,
    objective_values,
    score_output,
    shared_evaluated_blocks,
)
from .types import CostWeights, FewShotExample, Prompt, RunHistory, TaskSpec, render_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetaPromptTemplates:
    """Loadable meta-prompt templates with named placeholders.

    The crossover template takes {task_description}, {mother}, {father}; the
    mutation template {task_description}, {instruction}. Both must instruct
    the meta LLM to wrap its output in <prompt></prompt> markers.
    """

    crossover_template: str
    mutation_template: str

    def __post_init__(self) -> None:
        for name, tpl, fields in (
            ("crossover", self.crossover_template, ("{mother}", "{father}")),
            ("mutation", self.mutation_template, ("{instruction}",)),
        ):
            if "<prompt>" not in tpl:
                raise ValueError(f"{name} template must mention the <prompt> marker")
            for f in fields:
                if f not in tpl:
                    raise ValueError(f"{name} template is missing placeholder {f}")

    @classmethod
    def default(cls) -> "MetaPromptTemplates":
        base = resources.files("mocapo") / "templates"
        return cls(
            crossover_template=(base / "crossover.txt").read_text(encoding="utf-8"),
            mutation_template=(base / "mutation.txt").read_text(encoding="utf-8"),
        )

    @classmethod
    def load(cls, crossover_path: str | Path, mutation_path: str | Path) -> "MetaPromptTemplates":
        return cls(
            crossover_template=Path(crossover_path).read_text(encoding="utf-8"),
            mutation_template=Path(mutation_path).read_text(encoding="utf-8"),
        )


def create_shots(
    task: TaskSpec,
    count: int,
    instruction: str,
    backend: CompletionBackend,
    rng: random.Random,
    params: CallParams,
    meter: BudgetMeter | None = None,
    enforce_budget: bool = False,
) -> list[FewShotExample]:
    """Sample instances from the shots pool and turn them into worked examples.

    Each sampled instance is solved zero-shot with the given instruction; a
    fully correct response becomes the example output (reasoning included),
    otherwise the gold label is wrapped in answer markers instead.
    """
    if count == 0:
        return []
    if count > len(task.shots):
        raise ValueError(
            f"requested {count} shots but the pool only has {len(task.shots)}"
        )
    picks = rng.sample(range(len(task.shots)), count)
    probe = Prompt(instruction=instruction)
    examples = []
    for idx in picks:
        instance = task.shots[idx]
        if enforce_budget and meter is not None and check_budget(meter):
            raise BudgetExhausted(meter)
        request = ChatRequest(
            model=params.model,
            messages=(("user", render_prompt(probe, instance.input)),),
            max_output_tokens=params.max_output_tokens,
            temperature=params.eval_temperature,
            seed=params.seed,
        )
        response = backend.complete(request)
        if meter is not None:
            meter.add_eval(response.total_tokens)
        score = score_output(task, instance, response.text)
        if score >= 1.0 and response.text.strip():
            output = response.text
        else:
            output = f"<final_answer>{instance.label}</final_answer>"
        examples.append(FewShotExample(input=instance.input, output=output))
    return examples


def initialize_pop(
    initial_instructions: Sequence[str],
    task: TaskSpec,
    max_shots: int,
    backend: CompletionBackend,
    rng: random.Random,
    params: CallParams,
    meter: BudgetMeter | None = None,
) -> list[Prompt]:
    """Augment each initial instruction with 0..max_shots created examples."""
    if not initial_instructions:
        raise ValueError("initial instruction list must be non-empty")
    population = []
    for instruction in initial_instructions:
        k = rng.randint(0, max_shots)
        shots = create_shots(task, k, instruction, backend, rng, params, meter)
        population.append(Prompt(instruction=instruction, few_shots=tuple(shots)))
    return population


def _best_by_dominance(
    p1: Prompt, p2: Prompt, v1, v2, rng: random.Random
) -> Prompt:
    # Pairwise NDS reduces to a dominance check; the crowding distance of a
    # two-point front is infinite on both sides, so ties fall to a coin flip.
    if moo.dominates(v1, v2):
        return p1
    if moo.dominates(v2, v1):
        return p2
    return p1 if rng.random() < 0.5 else p2


def _single_tournament(
    population: Sequence[Prompt],
    incumbent_ids: set[str],
    history: RunHistory,
    weights: CostWeights,
    rng: random.Random,
) -> Prompt:
    i, j = rng.sample(range(len(population)), 2)
    p1, p2 = population[i], population[j]
    inc1, inc2 = p1.id in incumbent_ids, p2.id in incumbent_ids

    if inc1 != inc2:
        # Case 1: exactly one candidate is an incumbent; it wins.
        return p1 if inc1 else p2

    if inc1 and inc2:
        # Case 2: both incumbents; larger crowding distance over the
        # incumbent set's vectors on the shared incumbent block basis wins.
        members = sorted(incumbent_ids)
        basis = shared_evaluated_blocks(members, history)
        vectors = [objective_values(pid, history, basis, weights) for pid in members]
        cd = dict(zip(members, moo.crowding_distance(vectors)))
        if cd[p1.id] > cd[p2.id]:
            return p1
        if cd[p2.id] > cd[p1.id]:
            return p2
        return p1 if rng.random() < 0.5 else p2

    blocks1 = history.evaluated_blocks(p1.id)
    blocks2 = history.evaluated_blocks(p2.id)
    if blocks1 == blocks2:
        # Case 3: non-incumbents at the same evaluation level.
        v1 = objective_values(p1.id, history, blocks1, weights)
        v2 = objective_values(p2.id, history, blocks2, weights)
        return _best_by_dominance(p1, p2, v1, v2, rng)
    if blocks1 < blocks2:
        # Case 4: weaker dominance on the smaller evaluation basis.
        v2r = objective_values(p2.id, history, blocks1, weights)
        v1r = objective_values(p1.id, history, blocks1, weights)
        if moo.weakly_dominates_on_subset(blocks2, blocks1, v2r, v1r):
            return p2
    elif blocks2 < blocks1:
        v1r = objective_values(p1.id, history, blocks2, weights)
        v2r = objective_values(p2.id, history, blocks2, weights)
        if moo.weakly_dominates_on_subset(blocks1, blocks2, v1r, v2r):
            return p1
    # Case 5: no clear preference; random selection decides.
    return p1 if rng.random() < 0.5 else p2


def tournament_select(
    population: Sequence[Prompt],
    incumbent_ids: Sequence[str],
    history: RunHistory,
    weights: CostWeights,
    rng: random.Random,
    restart_cap: int = 25,
) -> tuple[Prompt, Prompt]:
    """Two independent binary tournaments yielding distinct parents.

    Tournaments are restarted until the second winner differs from the first;
    if the composition makes that impossible within restart_cap rounds, the
    second parent falls back to a uniform draw over the remaining prompts.
    """
    if len(population) < 2:
        raise ValueError("parent selection needs a population of at least 2")
    if len({p.id for p in population}) < 2:
        raise ValueError("population has collapsed to one distinct prompt")
    incumbents = set(incumbent_ids)
    parent_a = _single_tournament(population, incumbents, history, weights, rng)
    for _ in range(restart_cap):
        parent_b = _single_tournament(population, incumbents, history, weights, rng)
        if parent_b.id != parent_a.id:
            return parent_a, parent_b
    others = [p for p in population if p.id != parent_a.id]
    return parent_a, others[rng.randrange(len(others))]


def _meta_instruction(
    backend: CompletionBackend,
    payload: str,
    params: CallParams,
    meter: BudgetMeter | None,
) -> str | None:
    """One meta call with a single retry on marker-less output."""
    for attempt in range(2):
        request = ChatRequest(
            model=params.model,
            messages=(("user", payload),),
            max_output_tokens=params.max_output_tokens,
            temperature=params.meta_temperature,
            seed=params.seed + attempt,
        )
        response = backend.complete(request)
        if meter is not None:
            meter.add_meta(response.total_tokens)
        answer = extract_marked_answer(response.text, tag="prompt")
        if answer is not None:
            return answer
    return None


def _dedup_shots(shots: Sequence[FewShotExample]) -> list[FewShotExample]:
    seen: set[tuple[str, str]] = set()
    out = []
    for s in shots:
        key = (s.input, s.output)
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


def crossover(
    population: Sequence[Prompt],
    incumbent_ids: Sequence[str],
    history: RunHistory,
    weights: CostWeights,
    meta_backend: CompletionBackend,
    templates: MetaPromptTemplates,
    num_offspring: int,
    task_description: str,
    rng: random.Random,
    params: CallParams,
    meter: BudgetMeter | None = None,
) -> list[Prompt]:
    """Create offspring from tournament-selected parent pairs.

    The meta LLM merges the parent instructions; offspring shots are sampled
    from the union of the parents' shots, floor-of-mean many.
    """
    offspring = []
    for _ in range(num_offspring):
        mother, father = tournament_select(
            population, incumbent_ids, history, weights, rng
        )
        payload = templates.crossover_template.format(
            task_description=task_description,
            mother=mother.instruction,
            father=father.instruction,
        )
        instruction = _meta_instruction(meta_backend, payload, params, meter)
        if instruction is None:
            logger.warning("meta crossover returned no <prompt> markers twice; "
                           "falling back to the first parent's instruction")
            instruction = mother.instruction
        pool = _dedup_shots(tuple(mother.few_shots) + tuple(father.few_shots))
        k = (mother.num_shots + father.num_shots) // 2
        shots = rng.sample(pool, k)
        offspring.append(Prompt(instruction=instruction, few_shots=tuple(shots)))
    return offspring


def mutate(
    offspring: Sequence[Prompt],
    meta_backend: CompletionBackend,
    eval_backend: CompletionBackend,
    templates: MetaPromptTemplates,
    task: TaskSpec,
    max_shots: int,
    rng: random.Random,
    params: CallParams,
    meter: BudgetMeter | None = None,
    enforce_budget: bool = False,
) -> list[Prompt]:
    """Rewrite each instruction via the meta LLM and jitter the shot tuple.

    One of three moves is drawn uniformly: create one new shot (if below
    max_shots), drop to a random subset one smaller (if any), or keep the
    count. The shot order is shuffled in every case.
    """
    mutated = []
    for prompt in offspring:
        payload = templates.mutation_template.format(
            task_description=task.task_description,
            instruction=prompt.instruction,
        )
        instruction = _meta_instruction(meta_backend, payload, params, meter)
        if instruction is None:
            logger.warning("meta mutation returned no <prompt> markers twice; "
                           "keeping the unmutated instruction")
            instruction = prompt.instruction
        shots = list(prompt.few_shots)
        move = rng.randrange(3)
        if move == 0 and len(shots) < max_shots:
            shots = shots + create_shots(
                task, 1, instruction, eval_backend, rng, params, meter, enforce_budget
            )
        elif move == 1 and len(shots) > 0:
            shots = rng.sample(shots, len(shots) - 1)
        rng.shuffle(shots)
        mutated.append(Prompt(instruction=instruction, few_shots=tuple(shots)))
    return mutated
