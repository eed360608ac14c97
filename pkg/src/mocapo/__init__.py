"""Multi-objective cost-aware prompt optimization.

Evolutionary search over instruction + few-shot prompts that jointly
minimizes negated task score and a dual-weighted token cost, with a
budget-allocating intensification loop, an NSGA-II steady-state baseline,
and a generalization-evaluation suite (optimistic/pessimistic hypervolume,
approximation gap, noisy R2, attainment surfaces). Runs against any
OpenAI-compatible endpoint or a deterministic simulator.
"""

from .types import (
    Block,
    CostWeights,
    EvalRecord,
    FewShotExample,
    InstanceEval,
    ObjectiveVector,
    OptimizerConfig,
    Prompt,
    RunHistory,
    TaskInstance,
    TaskSpec,
    render_prompt,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "CostWeights",
    "EvalRecord",
    "FewShotExample",
    "InstanceEval",
    "ObjectiveVector",
    "OptimizerConfig",
    "Prompt",
    "RunHistory",
    "TaskInstance",
    "TaskSpec",
    "render_prompt",
    "__version__",
]
