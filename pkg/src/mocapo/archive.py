"""Run archives: schema-versioned JSON records of a full optimization run.

The file is a single JSON document written deterministically: header fields
are one line each (keys sorted), then snapshots and history records one
compact JSON object per line, so archives stay grep-able and diff-able and
identical runs produce byte-identical files. A config hash embedded at write
time detects tampered archives.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .types import (
    EvalRecord,
    FewShotExample,
    InstanceEval,
    Prompt,
    RunHistory,
)

SCHEMA_VERSION = 1


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


class ArchiveError(RuntimeError):
    pass


def record_to_dict(record: EvalRecord) -> dict:
    return {
        "prompt_id": record.prompt_id,
        "block": record.block_index,
        "entries": [
            [e.instance_id, e.score, e.tok_in, e.tok_out, e.raw_output, e.tok_estimated]
            for e in record.entries
        ],
    }


def record_from_dict(data: dict) -> EvalRecord:
    return EvalRecord(
        prompt_id=data["prompt_id"],
        block_index=int(data["block"]),
        entries=tuple(
            InstanceEval(
                instance_id=row[0],
                score=float(row[1]),
                tok_in=int(row[2]),
                tok_out=int(row[3]),
                raw_output=row[4],
                tok_estimated=bool(row[5]),
            )
            for row in data["entries"]
        ),
    )


def prompt_to_dict(prompt: Prompt) -> dict:
    return {
        "instruction": prompt.instruction,
        "few_shots": [[s.input, s.output] for s in prompt.few_shots],
    }


def prompt_from_dict(data: dict) -> Prompt:
    return Prompt(
        instruction=data["instruction"],
        few_shots=tuple(FewShotExample(input=i, output=o) for i, o in data["few_shots"]),
    )


@dataclass
class RunArchive:
    """Serializable record of one optimization run plus optional test vectors."""

    task_name: str
    optimizer: str
    seed: int
    config: dict
    budget: dict
    blocks: list[list[str]]
    prompts: dict[str, dict]
    snapshots: list[dict]
    final_front: dict
    final_population: list[str]
    history_records: list[dict]
    budget_trace: list[list[int]]
    test_vectors: dict[str, list[float]] | None = None
    test_token_means: dict[str, list[float]] | None = None
    schema_version: int = SCHEMA_VERSION
    config_hash: str = ""

    def __post_init__(self) -> None:
        if not self.config_hash:
            self.config_hash = config_digest(self.config)

    @classmethod
    def from_result(cls, result, config: dict) -> "RunArchive":
        meter = result.meter
        return cls(
            task_name=result.task.name,
            optimizer=result.optimizer,
            seed=result.config.seed,
            config=config,
            budget={
                "tokens": meter.budget,
                "step_cap": meter.step_cap,
                "consumed": meter.consumed,
                "meta_tokens": meter.meta_consumed,
                "steps": meter.step_count,
                "stopped_early": result.stopped_early,
            },
            blocks=[list(b.instance_ids) for b in result.blocks],
            prompts={pid: prompt_to_dict(p) for pid, p in sorted(result.prompts.items())},
            snapshots=list(result.snapshots),
            final_front={
                "ids": list(result.front_ids),
                "vectors": {pid: list(v) for pid, v in result.front_vectors.items()},
                "basis": list(result.front_basis),
            },
            final_population=[p.id for p in result.population],
            history_records=[record_to_dict(r) for r in result.history.iter_records()],
            budget_trace=[
                [snap["step"], snap["tokens"], snap["meta_tokens"]]
                for snap in result.snapshots
            ],
        )

    def front_prompts(self) -> list[Prompt]:
        return [prompt_from_dict(self.prompts[pid]) for pid in self.final_front["ids"]]

    def snapshot_prompt_ids(self) -> list[str]:
        """Union of incumbent ids across all snapshots, in first-seen order."""
        seen: dict[str, None] = {}
        for snap in self.snapshots:
            for pid in snap["incumbents"]:
                seen.setdefault(pid, None)
        return list(seen)

    def rebuild_history(self) -> RunHistory:
        history = RunHistory()
        for row in self.history_records:
            history.add(record_from_dict(row))
        return history

    def verify_config_hash(self) -> None:
        if config_digest(self.config) != self.config_hash:
            raise ArchiveError("archive config hash mismatch: file was tampered with")

    def _head(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "task_name": self.task_name,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "config": self.config,
            "config_hash": self.config_hash,
            "budget": self.budget,
            "blocks": self.blocks,
            "prompts": self.prompts,
            "final_front": self.final_front,
            "final_population": self.final_population,
            "budget_trace": self.budget_trace,
            "test_vectors": self.test_vectors,
            "test_token_means": self.test_token_means,
        }

    def to_json_str(self) -> str:
        lines = ["{"]
        head = self._head()
        for key in sorted(head):
            lines.append(f' "{key}": {canonical_json(head[key])},')
        lines.append(' "snapshots": [')
        for i, snap in enumerate(self.snapshots):
            comma = "," if i < len(self.snapshots) - 1 else ""
            lines.append("  " + canonical_json(snap) + comma)
        lines.append(" ],")
        lines.append(' "history": [')
        for i, rec in enumerate(self.history_records):
            comma = "," if i < len(self.history_records) - 1 else ""
            lines.append("  " + canonical_json(rec) + comma)
        lines.append(" ]")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json_str(), encoding="utf-8")
        return path

    @classmethod
    def from_json_str(cls, text: str) -> "RunArchive":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ArchiveError(f"archive is not valid JSON: {exc}") from exc
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ArchiveError(
                f"unsupported archive schema {doc.get('schema_version')!r}"
            )
        archive = cls(
            task_name=doc["task_name"],
            optimizer=doc["optimizer"],
            seed=int(doc["seed"]),
            config=doc["config"],
            budget=doc["budget"],
            blocks=doc["blocks"],
            prompts=doc["prompts"],
            snapshots=doc["snapshots"],
            final_front=doc["final_front"],
            final_population=doc["final_population"],
            history_records=doc["history"],
            budget_trace=doc["budget_trace"],
            test_vectors=doc.get("test_vectors"),
            test_token_means=doc.get("test_token_means"),
            config_hash=doc["config_hash"],
        )
        archive.verify_config_hash()
        return archive

    @classmethod
    def read(cls, path: str | Path) -> "RunArchive":
        return cls.from_json_str(Path(path).read_text(encoding="utf-8"))
