"""Task bundle construction: synthetic generator and JSONL loading."""

from __future__ import annotations

import json
import random
from pathlib import Path

from .types import TaskInstance, TaskSpec

_LABELS = ("alpha", "beta", "gamma", "delta")

_INPUT_VOCAB = (
    "ledger", "gradient", "harbor", "lattice", "meadow", "circuit", "violet",
    "quarry", "ember", "basalt", "orchard", "signal", "tundra", "cobalt",
    "marble", "drift", "canyon", "prism", "willow", "anchor",
)


def make_synthetic_task(
    name: str = "synthetic",
    dev_size: int = 60,
    shots_size: int = 20,
    test_size: int = 40,
    n_classes: int = 2,
    gen_seed: int = 0,
    scorer: str = "exact-match-marker",
    input_words: int = 4,
) -> TaskSpec:
    """Deterministic labeled classification task for simulator-backed runs.

    The generator seed is independent of the per-run seed, so one task can be
    shared across seeds of an experiment. input_words sets the instance body
    length; longer bodies shift the cost objective toward the input side.
    """
    if not 2 <= n_classes <= len(_LABELS):
        raise ValueError(f"n_classes must be in [2, {len(_LABELS)}]")
    if input_words < 1:
        raise ValueError("input_words must be >= 1")
    labels = _LABELS[:n_classes]
    rng = random.Random(gen_seed)

    def split(prefix: str, size: int) -> tuple[TaskInstance, ...]:
        out = []
        for i in range(size):
            words = " ".join(rng.choice(_INPUT_VOCAB) for _ in range(input_words))
            out.append(
                TaskInstance(
                    id=f"{prefix}-{i:04d}",
                    input=f"{prefix} case {i}: {words}",
                    label=rng.choice(labels),
                )
            )
        return tuple(out)

    description = (
        f"Assign each input to one of the labels: {', '.join(labels)}. "
        "The answer will be extracted between the markers "
        "<final_answer>answer</final_answer>."
    )
    return TaskSpec(
        name=name,
        task_description=description,
        scorer=scorer,
        dev=split("dev", dev_size),
        shots=split("shots", shots_size),
        test=split("test", test_size),
    )


def _load_jsonl(path: str | Path) -> tuple[TaskInstance, ...]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            for field in ("id", "input", "label"):
                if field not in row:
                    raise ValueError(f"{path}:{lineno}: missing field {field!r}")
            instances.append(
                TaskInstance(
                    id=str(row["id"]), input=str(row["input"]), label=str(row["label"])
                )
            )
    return tuple(instances)


def load_task_files(
    name: str,
    task_description: str,
    scorer: str,
    dev_path: str | Path,
    shots_path: str | Path,
    test_path: str | Path,
) -> TaskSpec:
    """Load a task from three JSON-lines files with fields {id, input, label}."""
    return TaskSpec(
        name=name,
        task_description=task_description,
        scorer=scorer,
        dev=_load_jsonl(dev_path),
        shots=_load_jsonl(shots_path),
        test=_load_jsonl(test_path),
    )
