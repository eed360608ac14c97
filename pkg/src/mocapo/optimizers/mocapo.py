"""Budget-allocating multi-objective optimizer loop.

Challengers race against the incumbent set on progressively more data blocks
and are rejected early when the nearest incumbent dominates them on the
shared blocks; survivors join the incumbent set, which is advanced one block
at a time to grow the common evaluation basis.
"""

from __future__ import annotations

import logging
import math
import random

from .. import moo
from ..backends.base import CallParams, CompletionBackend
from ..evaluation import (
    BudgetExhausted,
    BudgetMeter,
    check_budget,
    shared_evaluated_blocks,
)
from ..operators import MetaPromptTemplates, crossover, initialize_pop, mutate
from ..types import ObjectiveVector, OptimizerConfig, Prompt, RunHistory, TaskSpec, partition_blocks
from .common import (
    EngineContext,
    ObjectiveNormalizer,
    RunResult,
    dedup_population,
    finalize_front,
    make_snapshot,
)

logger = logging.getLogger(__name__)


def closest_incumbent(
    ctx: EngineContext, incumbent_ids: list[str], challenger_id: str, shared: set[int]
) -> str:
    """Incumbent nearest to the challenger in normalized objective space.

    All vectors are taken over the challenger's evaluated blocks; min-max
    bounds come from every objective value seen so far in the run. Ties go to
    the lowest prompt id.
    """
    members = sorted(incumbent_ids)
    vectors = {pid: ctx.objectives(pid, shared) for pid in members}
    challenger_vec = ctx.objectives(challenger_id, shared)
    chal_norm = ctx.normalizer.normalize(challenger_vec)
    best_id = members[0]
    best_dist = math.inf
    for pid in members:
        norm = ctx.normalizer.normalize(vectors[pid])
        dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(norm, chal_norm)))
        if dist < best_dist:
            best_dist = dist
            best_id = pid
    return best_id


def advance_incumbents(ctx: EngineContext, incumbent_ids: list[str]) -> None:
    """Evaluate the least-evaluated incumbent on one more block.

    If every incumbent shares the same block set, a previously unseen block
    is sampled (expand); otherwise the laggard picks up one of the blocks the
    other incumbents already cover (catch up). No candidate blocks: no-op.
    """
    counts = {pid: len(ctx.history.evaluated_blocks(pid)) for pid in incumbent_ids}
    target = min(sorted(incumbent_ids), key=lambda pid: counts[pid])
    b_min = ctx.history.evaluated_blocks(target)
    if all(ctx.history.evaluated_blocks(pid) == b_min for pid in incumbent_ids):
        rest = sorted(set(ctx.blocks_by_index) - b_min)
    else:
        union: set[int] = set()
        for pid in incumbent_ids:
            union |= ctx.history.evaluated_blocks(pid)
        rest = sorted(union - b_min)
    if not rest:
        return
    pick = rest[ctx.rng.randrange(len(rest))]
    ctx.evaluate_pair(ctx.prompts[target], pick, enforce=True)


def environmental_selection(
    ctx: EngineContext, population: list[Prompt], incumbent_ids: list[str]
) -> tuple[list[Prompt], list[str]]:
    """Shrink the population back to mu, removing non-incumbents first.

    Non-incumbents on one shared block set go by front rank with lowest
    crowding distance as tie-break; heterogeneous ones are removed uniformly
    at random among those with the fewest evaluated blocks. Once only
    incumbents remain, the lowest crowding distance over the shared incumbent
    basis goes, and that prompt leaves the incumbent set too.
    """
    population = list(population)
    incumbent_ids = list(incumbent_ids)
    while len(population) > ctx.config.mu:
        inc_set = set(incumbent_ids)
        non_inc = [p for p in population if p.id not in inc_set]
        if non_inc:
            block_sets = {p.id: ctx.history.evaluated_blocks(p.id) for p in non_inc}
            if len(set(block_sets.values())) == 1:
                basis = block_sets[non_inc[0].id]
                vectors = [ctx.objectives(p.id, basis) for p in non_inc]
                ranks = moo.nds_ranks(vectors)
                worst_rank = int(ranks.max())
                worst_front = [i for i in range(len(non_inc)) if ranks[i] == worst_rank]
                cds = moo.crowding_distance([vectors[i] for i in worst_front])
                local = min(range(len(worst_front)), key=lambda k: (cds[k], k))
                victim_id = non_inc[worst_front[local]].id
            else:
                fewest = min(len(bs) for bs in block_sets.values())
                pool = [p for p in non_inc if len(block_sets[p.id]) == fewest]
                victim_id = pool[ctx.rng.randrange(len(pool))].id
        else:
            basis = shared_evaluated_blocks(incumbent_ids, ctx.history)
            vectors = [ctx.objectives(pid, basis) for pid in incumbent_ids]
            cds = moo.crowding_distance(vectors)
            pick = min(range(len(incumbent_ids)), key=lambda k: (cds[k], k))
            victim_id = incumbent_ids[pick]
            incumbent_ids = [pid for pid in incumbent_ids if pid != victim_id]
        population = [p for p in population if p.id != victim_id]
        ctx.emit(
            "env_selection",
            removed=victim_id,
            population=[p.id for p in population],
            incumbents=list(incumbent_ids),
        )
    return population, incumbent_ids


def _add_to_population(population: list[Prompt], prompt: Prompt) -> list[Prompt]:
    if any(p.id == prompt.id for p in population):
        return population
    return population + [prompt]


def intensify(
    ctx: EngineContext,
    incumbent_ids: list[str],
    population: list[Prompt],
    challenger: Prompt,
) -> tuple[list[str], list[Prompt]]:
    """Race one challenger against the incumbent set.

    The challenger is evaluated on blocks sampled from the incumbents' shared
    basis until its cumulative estimate dominates the previous one (compare
    against the closest incumbent, reject early if dominated) or the basis is
    exhausted (join the population and re-assess the incumbent set by
    non-dominated sorting). A challenger already in the incumbent set is
    skipped outright; one already in the population resumes from its cached
    evaluations.
    """
    if challenger.id in incumbent_ids:
        ctx.emit("intensify_skipped", challenger=challenger.id)
        return incumbent_ids, population

    b_inter = set(shared_evaluated_blocks(incumbent_ids, ctx.history))
    b_chal = set(ctx.history.evaluated_blocks(challenger.id)) & b_inter
    f_new: ObjectiveVector = ObjectiveVector.sentinel(2)

    while True:
        f_old = f_new
        while True:
            remaining = sorted(b_inter - b_chal)
            if remaining:
                pick = remaining[ctx.rng.randrange(len(remaining))]
                ctx.emit(
                    "challenger_block",
                    challenger=challenger.id,
                    block=pick,
                    basis=frozenset(b_inter),
                )
                ctx.evaluate_pair(challenger, pick, enforce=True)
                b_chal.add(pick)
            f_new = ctx.objectives(challenger.id, b_chal)
            if moo.dominates(f_new, f_old) or b_chal == b_inter:
                break
        if b_chal == b_inter:
            # Challenger survived on the full shared basis: temporal acceptance,
            # then re-assess which members stay non-dominated.
            population = _add_to_population(population, challenger)
            members = list(incumbent_ids)
            if challenger.id not in members:
                members.append(challenger.id)
            vectors = [ctx.objectives(pid, b_chal) for pid in members]
            keep = moo.non_dominated_indices(vectors)
            incumbent_ids = [members[i] for i in keep]
            break
        nearest = closest_incumbent(ctx, incumbent_ids, challenger.id, b_chal)
        f_inc = ctx.objectives(nearest, b_chal)
        if moo.dominates(f_inc, f_new):
            # Early rejection: keep the challenger as genetic material only.
            population = _add_to_population(population, challenger)
            break

    if len(population) > ctx.config.mu:
        population, incumbent_ids = environmental_selection(
            ctx, population, incumbent_ids
        )
    advance_incumbents(ctx, incumbent_ids)
    # A catch-up advance can grow the shared basis; re-certify mutual
    # non-domination there so stale incumbents never linger. Dropped members
    # stay in the population as genetic material.
    basis = shared_evaluated_blocks(incumbent_ids, ctx.history)
    vectors = [ctx.objectives(pid, basis) for pid in incumbent_ids]
    keep = moo.non_dominated_indices(vectors)
    incumbent_ids = [incumbent_ids[i] for i in keep]
    return incumbent_ids, population


def run_mocapo(
    task: TaskSpec,
    initial_instructions: list[str],
    config: OptimizerConfig,
    eval_backend: CompletionBackend,
    meta_backend: CompletionBackend,
    templates: MetaPromptTemplates | None = None,
    params: CallParams | None = None,
    observer=None,
) -> RunResult:
    """Full optimization run; returns the incumbent set and the run archive data.

    Initialization evaluates the whole population on one sampled block and is
    not budget-gated; from then on the budget is checked at iteration
    boundaries and before every block evaluation, so exhaustion mid-run stops
    gracefully with the current incumbents.
    """
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
    init_block = blocks[rng.randrange(len(blocks))]
    ctx.evaluator.evaluate(population, [init_block], ctx.history, meter=meter)
    init_vectors = [ctx.objectives(p.id, {init_block.index}) for p in population]
    incumbent_ids = [
        population[i].id for i in moo.non_dominated_indices(init_vectors)
    ]

    snapshots = [make_snapshot(ctx, 0, incumbent_ids, {init_block.index})]
    ctx.emit(
        "boundary",
        step=0,
        incumbents=list(incumbent_ids),
        population=[p.id for p in population],
        basis=shared_evaluated_blocks(incumbent_ids, ctx.history),
        history=ctx.history,
        weights=config.weights,
    )

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
            offspring = crossover(
                population,
                incumbent_ids,
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
            for challenger in offspring:
                ctx.register(challenger)
                incumbent_ids, population = intensify(
                    ctx, incumbent_ids, population, challenger
                )
            meter.step_count = step
            basis = shared_evaluated_blocks(incumbent_ids, ctx.history)
            snapshots.append(make_snapshot(ctx, step, incumbent_ids, basis))
            ctx.emit(
                "boundary",
                step=step,
                incumbents=list(incumbent_ids),
                population=[p.id for p in population],
                basis=basis,
                history=ctx.history,
                weights=config.weights,
            )
    except BudgetExhausted:
        stopped_early = True
        logger.info("budget exhausted mid-iteration %d; stopping gracefully", step)
        basis = shared_evaluated_blocks(incumbent_ids, ctx.history)
        snapshots.append(make_snapshot(ctx, step, incumbent_ids, basis, partial=True))
        ctx.emit(
            "boundary",
            step=step,
            incumbents=list(incumbent_ids),
            population=[p.id for p in population],
            basis=basis,
            history=ctx.history,
            weights=config.weights,
        )

    front_vectors, front_basis = finalize_front(ctx, incumbent_ids)
    return RunResult(
        optimizer="mocapo",
        task=task,
        config=config,
        blocks=blocks,
        history=ctx.history,
        meter=meter,
        population=population,
        front_ids=list(incumbent_ids),
        front_vectors=front_vectors,
        front_basis=front_basis,
        snapshots=snapshots,
        prompts=ctx.prompts,
        stopped_early=stopped_early,
    )
