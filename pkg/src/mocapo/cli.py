"""Command-line surface: batch runs, test evaluation, metric reports, plots.

Subcommands: run, test-eval, metrics, eas, trajectory, replay. Configuration
is one JSON document with sections {task, backend, optimizer, budget, seeds,
weights, initial_instructions}; defaults cover everything except the initial
instructions. HTTP credentials come from MOCAPO_API_KEY / MOCAPO_BASE_URL.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import metrics as metrics_mod
from .archive import RunArchive, prompt_from_dict
from .backends import (
    CallParams,
    FixtureRecorder,
    FixtureReplayBackend,
    HttpChatBackend,
    SimulatorEvalBackend,
    SimulatorMetaBackend,
    SimulatorProfile,
)
from .evaluation import evaluate_on_instances
from .operators import MetaPromptTemplates
from .optimizers import OPTIMIZERS, execute_run
from .plotting import render_svg
from .tasks import load_task_files, make_synthetic_task
from .types import CostWeights, OptimizerConfig, TaskSpec

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG: dict = {
    "task": {
        "kind": "synthetic",
        "name": "synthetic",
        "dev_size": 60,
        "shots_size": 20,
        "test_size": 40,
        "n_classes": 2,
        "gen_seed": 0,
        "scorer": "exact-match-marker",
        "input_words": 4,
    },
    "backend": {
        "kind": "simulator",
        "profile": {},
        "model": "default",
        "base_url": None,
        "timeout_s": 60.0,
        "max_retries": 5,
        "fixture_mode": None,
        "fixture_path": None,
        "eval_temperature": 0.0,
        "meta_temperature": 1.0,
        "max_output_tokens": 3000,
        "concurrency": 1,
    },
    "optimizer": {
        "name": "mocapo",
        "mu": 10,
        "block_size": 30,
        "crossovers": 4,
        "max_shots": 5,
        "iterations": None,
    },
    "budget": {"tokens": 7_500_000, "step_cap": 2000},
    "weights": {"w_in": 0.08, "w_out": 0.32},
    "seeds": [0],
    "initial_instructions": [],
    "templates": None,
}


def _merge_defaults(user: dict) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    for key, value in user.items():
        if key in cfg and isinstance(cfg[key], dict) and isinstance(value, dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def load_config(path: str | Path) -> dict:
    """Parse and validate a config file; errors carry line or path context."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(user) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"{path}: unknown config sections {sorted(unknown)}")
    cfg = _merge_defaults(user)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    def fail(path: str, message: str):
        raise ConfigError(f"config {path}: {message}")

    task = cfg["task"]
    if task["kind"] not in ("synthetic", "files"):
        fail("task.kind", f"must be 'synthetic' or 'files', got {task['kind']!r}")
    if task["kind"] == "files":
        for key in ("dev_path", "shots_path", "test_path", "task_description"):
            if not task.get(key):
                fail(f"task.{key}", "required for task.kind='files'")
    backend = cfg["backend"]
    if backend["kind"] not in ("simulator", "http"):
        fail("backend.kind", f"must be 'simulator' or 'http', got {backend['kind']!r}")
    if backend["fixture_mode"] not in (None, "record", "replay"):
        fail("backend.fixture_mode", "must be null, 'record' or 'replay'")
    if backend["fixture_mode"] and not backend.get("fixture_path"):
        fail("backend.fixture_path", "required when fixture_mode is set")
    opt = cfg["optimizer"]
    if opt["name"] not in OPTIMIZERS:
        fail("optimizer.name", f"must be one of {OPTIMIZERS}, got {opt['name']!r}")
    try:
        _make_optimizer_config(cfg, seed=0)
    except ValueError as exc:
        fail("optimizer/budget/weights", str(exc))
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(
        isinstance(s, int) for s in seeds
    ):
        fail("seeds", "must be a non-empty list of integers")
    instructions = cfg["initial_instructions"]
    if not isinstance(instructions, list) or not all(
        isinstance(i, str) and i.strip() for i in instructions
    ):
        fail("initial_instructions", "must be a list of non-empty strings")
    if len(instructions) != opt["mu"]:
        fail(
            "initial_instructions",
            f"need exactly optimizer.mu={opt['mu']} entries, got {len(instructions)}",
        )
    templates = cfg["templates"]
    if templates is not None:
        for key in ("crossover_path", "mutation_path"):
            if not templates.get(key):
                fail(f"templates.{key}", "required when templates is set")


def _make_optimizer_config(cfg: dict, seed: int) -> OptimizerConfig:
    opt = cfg["optimizer"]
    return OptimizerConfig(
        mu=opt["mu"],
        block_size=opt["block_size"],
        iterations=opt["iterations"],
        crossovers=opt["crossovers"],
        max_shots=opt["max_shots"],
        weights=CostWeights(cfg["weights"]["w_in"], cfg["weights"]["w_out"]),
        budget_tokens=cfg["budget"]["tokens"],
        step_cap=cfg["budget"]["step_cap"],
        seed=seed,
    )


def build_task(task_cfg: dict) -> TaskSpec:
    if task_cfg["kind"] == "synthetic":
        return make_synthetic_task(
            name=task_cfg["name"],
            dev_size=task_cfg["dev_size"],
            shots_size=task_cfg["shots_size"],
            test_size=task_cfg["test_size"],
            n_classes=task_cfg["n_classes"],
            gen_seed=task_cfg["gen_seed"],
            scorer=task_cfg["scorer"],
            input_words=task_cfg["input_words"],
        )
    return load_task_files(
        name=task_cfg["name"],
        task_description=task_cfg["task_description"],
        scorer=task_cfg["scorer"],
        dev_path=task_cfg["dev_path"],
        shots_path=task_cfg["shots_path"],
        test_path=task_cfg["test_path"],
    )


def build_backends(backend_cfg: dict, task: TaskSpec):
    kind = backend_cfg["kind"]
    if kind == "simulator":
        profile = SimulatorProfile.from_dict(backend_cfg.get("profile") or {})
        return SimulatorEvalBackend(task, profile), SimulatorMetaBackend(profile)
    if backend_cfg["fixture_mode"] == "replay":
        replay = FixtureReplayBackend(backend_cfg["fixture_path"])
        return replay, replay
    http = HttpChatBackend(
        model=backend_cfg["model"],
        base_url=backend_cfg["base_url"],
        timeout=backend_cfg["timeout_s"],
        max_retries=backend_cfg["max_retries"],
    )
    if backend_cfg["fixture_mode"] == "record":
        recorded = FixtureRecorder(http, backend_cfg["fixture_path"])
        return recorded, recorded
    return http, http


def _make_call_params(backend_cfg: dict, seed: int) -> CallParams:
    return CallParams(
        model=backend_cfg["model"],
        seed=seed,
        eval_temperature=backend_cfg["eval_temperature"],
        meta_temperature=backend_cfg["meta_temperature"],
        max_output_tokens=backend_cfg["max_output_tokens"],
        concurrency=backend_cfg["concurrency"],
    )


def _make_templates(templates_cfg: dict | None) -> MetaPromptTemplates:
    if templates_cfg is None:
        return MetaPromptTemplates.default()
    return MetaPromptTemplates.load(
        templates_cfg["crossover_path"], templates_cfg["mutation_path"]
    )


def run_one(cfg: dict, seed: int) -> tuple:
    """Execute one seeded run; returns (RunResult, resolved config)."""
    task = build_task(cfg["task"])
    eval_backend, meta_backend = build_backends(cfg["backend"], task)
    result = execute_run(
        cfg["optimizer"]["name"],
        task,
        list(cfg["initial_instructions"]),
        _make_optimizer_config(cfg, seed),
        eval_backend,
        meta_backend,
        templates=_make_templates(cfg["templates"]),
        params=_make_call_params(cfg["backend"], seed),
    )
    resolved = copy.deepcopy(cfg)
    resolved["seeds"] = [seed]
    return result, resolved


def _archive_path(out_dir: Path, archive: RunArchive) -> Path:
    return out_dir / f"{archive.task_name}_{archive.optimizer}_seed{archive.seed}.json"


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seeds"] = [args.seed]
    if args.budget_tokens is not None:
        cfg["budget"]["tokens"] = args.budget_tokens
    if args.optimizer is not None:
        cfg["optimizer"]["name"] = args.optimizer
    if args.backend is not None:
        cfg["backend"]["kind"] = args.backend
    validate_config(cfg)
    out_dir = Path(args.out)
    for seed in cfg["seeds"]:
        result, resolved = run_one(cfg, seed)
        archive = RunArchive.from_result(result, resolved)
        path = archive.write(_archive_path(out_dir, archive))
        print(path)
    return 0


def _compute_test_vectors(
    archive: RunArchive, prompt_ids: list[str]
) -> tuple[dict, dict]:
    cfg = archive.config
    task = build_task(cfg["task"])
    if not task.test:
        raise ConfigError("task has an empty test split; nothing to evaluate")
    eval_backend, _ = build_backends(cfg["backend"], task)
    params = _make_call_params(cfg["backend"], archive.seed)
    weights = CostWeights(cfg["weights"]["w_in"], cfg["weights"]["w_out"])
    vectors: dict[str, list[float]] = {}
    token_means: dict[str, list[float]] = {}
    for pid in prompt_ids:
        prompt = prompt_from_dict(archive.prompts[pid])
        vec, mean_in, mean_out = evaluate_on_instances(
            prompt, list(task.test), task, eval_backend, weights, params
        )
        vectors[pid] = list(vec.values)
        token_means[pid] = [mean_in, mean_out]
    return vectors, token_means


def cmd_test_eval(args) -> int:
    archive = RunArchive.read(args.archive)
    ids = list(archive.final_front["ids"])
    if args.include_steps:
        for pid in archive.snapshot_prompt_ids():
            if pid not in ids:
                ids.append(pid)
    vectors, token_means = _compute_test_vectors(archive, ids)
    archive.test_vectors = vectors
    archive.test_token_means = token_means
    out = Path(args.out) if args.out else Path(args.archive)
    archive.write(out)
    print(out)
    return 0


def _load_archives(paths) -> list[RunArchive]:
    archives = [RunArchive.read(p) for p in paths]
    names = {a.task_name for a in archives}
    if len(names) > 1:
        raise ConfigError(f"archives mix incompatible tasks: {sorted(names)}")
    return archives


def _emit_csv(rows: list[dict], fieldnames: list[str], out: str | None) -> None:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(buffer.getvalue(), encoding="utf-8")
        print(out)
    else:
        sys.stdout.write(buffer.getvalue())


def cmd_metrics(args) -> int:
    archives = _load_archives(args.archives)
    ref = tuple(args.ref)
    if args.bounds_policy == "union":
        shared_bounds = metrics_mod.bounds_from_archives(archives)
    rows = []
    by_optimizer: dict[str, list] = {}
    for path, archive in zip(args.archives, archives):
        bounds = (
            shared_bounds
            if args.bounds_policy == "union"
            else metrics_mod.bounds_from_archives([archive])
        )
        report = metrics_mod.archive_report(
            archive, bounds, ref, args.n_pref, args.metric_seed
        )
        rows.append(
            {
                "archive": str(path),
                "optimizer": archive.optimizer,
                "seed": archive.seed,
                "nr2": f"{report.nr2:.6f}",
                "hv_opt": f"{report.hv_optimistic:.6f}",
                "hv_pes": f"{report.hv_pessimistic:.6f}",
                "gap": f"{report.gap:.6f}",
            }
        )
        by_optimizer.setdefault(archive.optimizer, []).append(report)
    for optimizer in sorted(by_optimizer):
        reports = by_optimizer[optimizer]
        for stat_name, stat in (("mean", _mean), ("std", _std)):
            rows.append(
                {
                    "archive": "-",
                    "optimizer": optimizer,
                    "seed": stat_name,
                    "nr2": f"{stat([r.nr2 for r in reports]):.6f}",
                    "hv_opt": f"{stat([r.hv_optimistic for r in reports]):.6f}",
                    "hv_pes": f"{stat([r.hv_pessimistic for r in reports]):.6f}",
                    "gap": f"{stat([r.gap for r in reports]):.6f}",
                }
            )
    _emit_csv(
        rows,
        ["archive", "optimizer", "seed", "nr2", "hv_opt", "hv_pes", "gap"],
        args.out,
    )
    return 0


def _mean(values) -> float:
    return sum(values) / len(values)


def _std(values) -> float:
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))


def cmd_eas(args) -> int:
    archives = _load_archives(args.archives)
    groups: dict[str, list[RunArchive]] = {}
    for archive in archives:
        groups.setdefault(archive.optimizer, []).append(archive)
    rows = []
    series = []
    for optimizer in sorted(groups):
        fronts = [metrics_mod.optimistic_test_front(a) for a in groups[optimizer]]
        for level in metrics_mod.eas_levels(len(fronts)):
            surface = metrics_mod.attainment_surface(fronts, level)
            label = f"{optimizer} L={level}/{len(fronts)}"
            series.append((label, [(float(x), float(y)) for x, y in surface]))
            for x, y in surface:
                rows.append(
                    {
                        "optimizer": optimizer,
                        "level": level,
                        "runs": len(fronts),
                        "x": f"{x:.6f}",
                        "y": f"{y:.6f}",
                    }
                )
    _emit_csv(rows, ["optimizer", "level", "runs", "x", "y"], args.out)
    if args.svg:
        render_svg(series, args.svg, staircase=True, title="attainment surfaces")
        print(args.svg)
    return 0


def cmd_trajectory(args) -> int:
    archives = _load_archives(args.archives)
    bounds = metrics_mod.bounds_from_archives(archives)
    ref = tuple(args.ref)
    rows = []
    series = []
    for path, archive in zip(args.archives, archives):
        result = metrics_mod.trajectory(
            archive, args.metric, bounds, ref, args.n_pref, args.metric_seed
        )
        budget = int(archive.budget["tokens"])
        label = f"{archive.optimizer} seed={archive.seed}"
        series.append((label, [(float(t), v) for t, v in result.points]))
        for step, (tokens, value) in zip(result.steps, result.points):
            rows.append(
                {
                    "archive": str(path),
                    "optimizer": archive.optimizer,
                    "seed": archive.seed,
                    "step": step,
                    "tokens": tokens,
                    "budget_fraction": f"{tokens / budget:.6f}" if budget else "0",
                    "value": f"{value:.6f}",
                    "tt80": "" if result.tt80 is None else f"{result.tt80:.6f}",
                    "iter1": "" if result.iter1 is None else result.iter1,
                }
            )
    _emit_csv(
        rows,
        [
            "archive",
            "optimizer",
            "seed",
            "step",
            "tokens",
            "budget_fraction",
            "value",
            "tt80",
            "iter1",
        ],
        args.out,
    )
    if args.svg:
        render_svg(series, args.svg, title=f"trajectory ({args.metric})")
        print(args.svg)
    return 0


def cmd_replay(args) -> int:
    original_text = Path(args.archive).read_text(encoding="utf-8")
    archive = RunArchive.from_json_str(original_text)
    if archive.config["backend"]["kind"] != "simulator":
        print("replay requires a simulator-backed archive", file=sys.stderr)
        return 2
    result, resolved = run_one(archive.config, archive.seed)
    rebuilt = RunArchive.from_result(result, resolved)
    if archive.test_vectors is not None:
        ids = list(archive.test_vectors)
        vectors, token_means = _compute_test_vectors(rebuilt, ids)
        rebuilt.test_vectors = vectors
        rebuilt.test_token_means = token_means
    if rebuilt.to_json_str() == original_text:
        print(f"replay OK: {args.archive} reproduces byte-identically")
        return 0
    print(f"replay FAILED: {args.archive} differs from the regenerated archive",
          file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mocapo",
        description="Multi-objective cost-aware prompt optimization",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one optimization run per seed")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--budget-tokens", type=int, default=None)
    p_run.add_argument("--optimizer", choices=OPTIMIZERS, default=None)
    p_run.add_argument("--backend", choices=("simulator", "http"), default=None)
    p_run.add_argument("--out", default=".", help="output directory for archives")
    p_run.set_defaults(func=cmd_run)

    p_test = sub.add_parser("test-eval", help="evaluate an archive's front on the test split")
    p_test.add_argument("--archive", required=True)
    p_test.add_argument("--out", default=None, help="output path (default: in place)")
    p_test.add_argument(
        "--include-steps",
        action="store_true",
        help="also evaluate every per-step incumbent (enables test-side trajectories)",
    )
    p_test.set_defaults(func=cmd_test_eval)

    p_metrics = sub.add_parser("metrics", help="nR2 / optimistic & pessimistic HV / gap report")
    p_metrics.add_argument("--archives", nargs="+", required=True)
    p_metrics.add_argument("--bounds-policy", choices=("union", "per-archive"), default="union")
    p_metrics.add_argument("--ref", type=float, nargs=2, default=list(metrics_mod.DEFAULT_REFERENCE))
    p_metrics.add_argument("--n-pref", type=int, default=metrics_mod.DEFAULT_N_PREF)
    p_metrics.add_argument("--metric-seed", type=int, default=0)
    p_metrics.add_argument("--out", default=None)
    p_metrics.set_defaults(func=cmd_metrics)

    p_eas = sub.add_parser("eas", help="empirical attainment surfaces")
    p_eas.add_argument("--archives", nargs="+", required=True)
    p_eas.add_argument("--out", default=None)
    p_eas.add_argument("--svg", default=None)
    p_eas.set_defaults(func=cmd_eas)

    p_traj = sub.add_parser("trajectory", help="per-step metric traces with TT80/Iter1")
    p_traj.add_argument("--archives", nargs="+", required=True)
    p_traj.add_argument("--metric", choices=metrics_mod.TRAJECTORY_METRICS, default="nr2")
    p_traj.add_argument("--ref", type=float, nargs=2, default=list(metrics_mod.DEFAULT_REFERENCE))
    p_traj.add_argument("--n-pref", type=int, default=metrics_mod.DEFAULT_N_PREF)
    p_traj.add_argument("--metric-seed", type=int, default=0)
    p_traj.add_argument("--out", default=None)
    p_traj.add_argument("--svg", default=None)
    p_traj.set_defaults(func=cmd_trajectory)

    p_replay = sub.add_parser("replay", help="re-run an archive and verify byte identity")
    p_replay.add_argument("--archive", required=True)
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
