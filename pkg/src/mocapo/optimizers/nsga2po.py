"""Steady-state NSGA-II baseline over prompts with full-dataset evaluation.

Same operators as the intensification-based optimizer, but every candidate is
evaluated on all development blocks, parent selection reduces to front rank
with crowding distance, and environmental selection removes one candidate at
a time, recalculating crowding distances after each removal.
"""

from __future__ import annotations

import logging
import random

from .. import moo
from ..backends.base import CallParams, CompletionBackend
from ..evaluation import BudgetExhausted, BudgetMeter, check_budget
from ..operators import MetaPromptTemplates, crossover, initialize_pop, mutate
from ..types import OptimizerConfig, Prompt, RunHistory, TaskSpec, partition_blocks
from .common import (
    EngineContext,
    ObjectiveNormalizer,
    RunResult,
    dedup_population,
    make_snapshot,
)

logger = logging.getLogger(__name__)


def _select_to_mu(
    ctx: EngineContext, pool: list[Prompt], basis: list[int]
) -> list[Prompt]:
    """Remove worst-front, lowest-CD candidates one at a time until mu remain."""
    pool = list(pool)
    while len(pool) > ctx.config.mu:
        vectors = [ctx.objectives(p.id, basis) for p in pool]
        ranks = moo.nds_ranks(vectors)
        worst_rank = int(ranks.max())
        worst_front = [i for i in range(len(pool)) if ranks[i] == worst_rank]
        cds = moo.crowding_distance([vectors[i] for i in worst_front])
        local = min(range(len(worst_front)), key=lambda k: (cds[k], k))
        del pool[worst_front[local]]
    return pool


def _front_ids(ctx: EngineContext, population: list[Prompt], basis: list[int]) -> list[str]:
    vectors = [ctx.objectives(p.id, basis) for p in population]
    return [population[i].id for i in moo.non_dominated_indices(vectors)]


def run_nsga2po(
    task: TaskSpec,
    initial_instructions: list[str],
    config: OptimizerConfig,
    eval_backend: CompletionBackend,
    meta_backend: CompletionBackend,
    templates: MetaPromptTemplates | None = None,
    params: CallParams | None = None,
    observer=None,
) -> RunResult:
    """Full baseline run; the reported front is the final population's first front."""
    if len(initial_instructions) != config.mu:
        raise ValueError(
            f"expected {config.mu} initial instructions, got {len(initial_instructions)}"
        )
    templates = templates or MetaPromptTemplates.default()
    params = params or CallParams(seed=config.seed)
    rng = random.Random(config.seed)

    dev_ids = [inst.id for inst in task.dev]
    rng.shuffle(dev_ids)
    blocks = partition_blocks(dev_ids, config.block_size)
    basis = sorted(b.index for b in blocks)
    meter = BudgetMeter(budget=config.budget_tokens, step_cap=config.step_cap)
    ctx = EngineContext(
        task=task,
        config=config,
        eval_backend=eval_backend,
        meta_backend=meta_backend,
        templates=templates,
        params=params,
        blocks=blocks,
        history=RunHistory(),
        meter=meter,
        rng=rng,
        normalizer=ObjectiveNormalizer(),
        observer=observer,
    )

    population = dedup_population(
        initialize_pop(
            initial_instructions, task, config.max_shots, eval_backend, rng, params, meter
        )
    )
    for prompt in population:
        ctx.register(prompt)
    ctx.evaluator.evaluate(population, blocks, ctx.history, meter=meter)

    snapshots = [make_snapshot(ctx, 0, _front_ids(ctx, population, basis), basis)]
    ctx.emit("boundary", step=0, population=[p.id for p in population])

    step = 0
    stopped_early = False
    try:
        while True:
            if config.iterations is not None and step >= config.iterations:
                break
            if check_budget(meter):
                stopped_early = meter.consumed >= meter.budget
                break
            step += 1
            # No incumbent set: the tournament reduces to rank/CD over the
            # shared full evaluation basis.
            offspring = crossover(
                population,
                [],
                ctx.history,
                config.weights,
                meta_backend,
                templates,
                config.crossovers,
                task.task_description,
                rng,
                params,
                meter,
            )
            offspring = mutate(
                offspring,
                meta_backend,
                eval_backend,
                templates,
                task,
                config.max_shots,
                rng,
                params,
                meter,
                enforce_budget=True,
            )
            for child in offspring:
                ctx.register(child)
            ctx.evaluator.evaluate(
                offspring, blocks, ctx.history, meter=meter, enforce_budget=True
            )
            known = {p.id for p in population}
            pool = population + [
                o for o in dedup_population(offspring) if o.id not in known
            ]
            population = _select_to_mu(ctx, pool, basis)
            meter.step_count = step
            snapshots.append(
                make_snapshot(ctx, step, _front_ids(ctx, population, basis), basis)
            )
            ctx.emit("boundary", step=step, population=[p.id for p in population])
    except BudgetExhausted:
        stopped_early = True
        logger.info("budget exhausted mid-generation %d; stopping gracefully", step)
        snapshots.append(
            make_snapshot(
                ctx, step, _front_ids(ctx, population, basis), basis, partial=True
            )
        )

    front = _front_ids(ctx, population, basis)
    front_vectors = {pid: tuple(ctx.objectives(pid, basis).values) for pid in front}
    return RunResult(
        optimizer="nsga2po",
        task=task,
        config=config,
        blocks=blocks,
        history=ctx.history,
        meter=meter,
        population=population,
        front_ids=front,
        front_vectors=front_vectors,
        front_basis=basis,
        snapshots=snapshots,
        prompts=ctx.prompts,
        stopped_early=stopped_early,
    )
