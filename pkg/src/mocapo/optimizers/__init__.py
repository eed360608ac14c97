"""Optimizer loops and the dispatch helper used by the CLI."""

from __future__ import annotations

from ..backends.base import CallParams, CompletionBackend
from ..operators import MetaPromptTemplates
from ..types import OptimizerConfig, TaskSpec
from .common import EngineContext, ObjectiveNormalizer, RunResult
from .mocapo import (
    advance_incumbents,
    closest_incumbent,
    environmental_selection,
    intensify,
    run_mocapo,
)
from .nsga2po import run_nsga2po

OPTIMIZERS = ("mocapo", "nsga2po")


def execute_run(
    optimizer: str,
    task: TaskSpec,
    initial_instructions: list[str],
    config: OptimizerConfig,
    eval_backend: CompletionBackend,
    meta_backend: CompletionBackend,
    templates: MetaPromptTemplates | None = None,
    params: CallParams | None = None,
    observer=None,
) -> RunResult:
    if optimizer == "mocapo":
        runner = run_mocapo
    elif optimizer == "nsga2po":
        runner = run_nsga2po
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}; expected one of {OPTIMIZERS}")
    return runner(
        task,
        initial_instructions,
        config,
        eval_backend,
        meta_backend,
        templates=templates,
        params=params,
        observer=observer,
    )


__all__ = [
    "OPTIMIZERS",
    "EngineContext",
    "ObjectiveNormalizer",
    "RunResult",
    "advance_incumbents",
    "closest_incumbent",
    "environmental_selection",
    "execute_run",
    "intensify",
    "run_mocapo",
    "run_nsga2po",
]
