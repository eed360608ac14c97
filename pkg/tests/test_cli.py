import csv
import json

import pytest

from mocapo.backends.simulator import SimulatorEvalBackend
from mocapo.archive import RunArchive
from mocapo.cli import ConfigError, load_config, main

BASE_CONFIG = {
    "task": {"name": "clidemo", "dev_size": 40, "shots_size": 10, "test_size": 12},
    "optimizer": {"name": "mocapo", "mu": 4, "block_size": 10, "crossovers": 2, "max_shots": 2},
    "budget": {"tokens": 20_000, "step_cap": 2000},
    "seeds": [0, 1, 2],
    "initial_instructions": [
        "Label the input.",
        "Pick the correct label for this input and wrap it in final answer markers.",
        "Classify the following input into one of the known labels.",
        "State the label for the input below.",
    ],
}


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(BASE_CONFIG))
    return path


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


class TestConfig:
    def test_defaults_are_merged(self, config_path):
        cfg = load_config(config_path)
        assert cfg["weights"] == {"w_in": 0.08, "w_out": 0.32}
        assert cfg["budget"]["step_cap"] == 2000
        assert cfg["backend"]["kind"] == "simulator"

    def test_json_errors_carry_line_numbers(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "task": {,}\n}')
        with pytest.raises(ConfigError, match=r"bad\.json:2:"):
            load_config(bad)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(dict(BASE_CONFIG, bogus={})))
        with pytest.raises(ConfigError, match="bogus"):
            load_config(path)

    def test_instruction_count_must_match_mu(self, tmp_path):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["initial_instructions"] = cfg["initial_instructions"][:2]
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        with pytest.raises(ConfigError, match="initial_instructions"):
            load_config(path)

    def test_cli_reports_config_errors(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text("{ not json")
        assert run_cli("run", "--config", path, "--out", tmp_path) == 2
        assert "error:" in capsys.readouterr().err


class TestCmdRun:
    def test_one_archive_per_seed(self, config_path, tmp_path):
        out = tmp_path / "archives"
        assert run_cli("run", "--config", config_path, "--out", out) == 0
        paths = sorted(out.glob("*.json"))
        assert [p.name for p in paths] == [
            "clidemo_mocapo_seed0.json",
            "clidemo_mocapo_seed1.json",
            "clidemo_mocapo_seed2.json",
        ]
        seeds = {RunArchive.read(p).seed for p in paths}
        assert seeds == {0, 1, 2}

    def test_budget_zero_archives_hold_only_initialization(self, config_path, tmp_path):
        out = tmp_path / "zero"
        assert run_cli(
            "run", "--config", config_path, "--out", out, "--seed", "0",
            "--budget-tokens", "0",
        ) == 0
        archive = RunArchive.read(out / "clidemo_mocapo_seed0.json")
        assert archive.budget["steps"] == 0
        assert len(archive.snapshots) == 1
        assert len(archive.history_records) == 4  # mu prompts x one block

    def test_repeated_invocation_is_byte_identical(self, config_path, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_cli("run", "--config", config_path, "--out", out_a, "--seed", "1")
        run_cli("run", "--config", config_path, "--out", out_b, "--seed", "1")
        a = (out_a / "clidemo_mocapo_seed1.json").read_bytes()
        b = (out_b / "clidemo_mocapo_seed1.json").read_bytes()
        assert a == b

    def test_optimizer_override(self, config_path, tmp_path):
        out = tmp_path / "n2"
        assert run_cli(
            "run", "--config", config_path, "--out", out, "--seed", "0",
            "--optimizer", "nsga2po",
        ) == 0
        archive = RunArchive.read(out / "clidemo_nsga2po_seed0.json")
        assert archive.optimizer == "nsga2po"


@pytest.fixture()
def archive_dir(config_path, tmp_path):
    out = tmp_path / "archives"
    run_cli("run", "--config", config_path, "--out", out)
    return out


class TestCmdTestEval:
    def test_adds_vectors_for_every_front_member(self, archive_dir):
        path = archive_dir / "clidemo_mocapo_seed0.json"
        assert run_cli("test-eval", "--archive", path) == 0
        archive = RunArchive.read(path)
        assert set(archive.test_vectors) == set(archive.final_front["ids"])
        assert set(archive.test_token_means) == set(archive.test_vectors)

    def test_call_count_is_front_size_times_test_size(self, archive_dir, monkeypatch):
        calls = {"n": 0}
        original = SimulatorEvalBackend.complete

        def counting(self, request):
            calls["n"] += 1
            return original(self, request)

        monkeypatch.setattr(SimulatorEvalBackend, "complete", counting)
        path = archive_dir / "clidemo_mocapo_seed1.json"
        run_cli("test-eval", "--archive", path)
        archive = RunArchive.read(path)
        assert calls["n"] == len(archive.final_front["ids"]) * 12

    def test_empty_test_split_errors(self, tmp_path):
        cfg = json.loads(json.dumps(BASE_CONFIG))
        cfg["task"]["test_size"] = 0
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "archives"
        run_cli("run", "--config", path, "--out", out, "--seed", "0")
        code = run_cli("test-eval", "--archive", out / "clidemo_mocapo_seed0.json")
        assert code == 2

    def test_include_steps_covers_snapshot_incumbents(self, archive_dir):
        path = archive_dir / "clidemo_mocapo_seed2.json"
        run_cli("test-eval", "--archive", path, "--include-steps")
        archive = RunArchive.read(path)
        assert set(archive.snapshot_prompt_ids()) <= set(archive.test_vectors)


class TestCmdMetrics:
    def test_report_layout_with_aggregates(self, archive_dir, tmp_path):
        paths = sorted(archive_dir.glob("*.json"))
        for p in paths:
            run_cli("test-eval", "--archive", p)
        report = tmp_path / "report.csv"
        assert run_cli(
            "metrics", "--archives", *paths, "--n-pref", "100", "--out", report
        ) == 0
        rows = list(csv.DictReader(report.read_text().splitlines()))
        assert len(rows) == 5  # 3 archives + mean + std
        assert [r["seed"] for r in rows[-2:]] == ["mean", "std"]
        for row in rows[:3]:
            assert float(row["hv_opt"]) >= float(row["hv_pes"]) - 1e-12
            assert float(row["gap"]) >= -1e-12

    def test_dev_equals_test_gives_zero_gap(self, archive_dir, capsys):
        path = archive_dir / "clidemo_mocapo_seed0.json"  # no test vectors
        assert run_cli("metrics", "--archives", path) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert float(rows[0]["gap"]) == 0.0

    def test_mixed_tasks_rejected(self, archive_dir, tmp_path):
        other_cfg = json.loads(json.dumps(BASE_CONFIG))
        other_cfg["task"]["name"] = "othertask"
        cfg_path = tmp_path / "other.json"
        cfg_path.write_text(json.dumps(other_cfg))
        other_out = tmp_path / "other-archives"
        run_cli("run", "--config", cfg_path, "--out", other_out, "--seed", "0")
        code = run_cli(
            "metrics",
            "--archives",
            archive_dir / "clidemo_mocapo_seed0.json",
            other_out / "othertask_mocapo_seed0.json",
        )
        assert code == 2

    def test_default_n_pref_is_500(self):
        from mocapo.cli import build_parser

        args = build_parser().parse_args(["metrics", "--archives", "x.json"])
        assert args.n_pref == 500


class TestCmdEasAndTrajectory:
    def test_three_seed_levels(self, archive_dir, tmp_path):
        paths = sorted(archive_dir.glob("*.json"))
        svg = tmp_path / "eas.svg"
        report = tmp_path / "eas.csv"
        assert run_cli("eas", "--archives", *paths, "--svg", svg, "--out", report) == 0
        rows = list(csv.DictReader(report.read_text().splitlines()))
        levels = sorted({int(r["level"]) for r in rows})
        assert levels == [1, 2, 3]
        assert svg.exists() and svg.read_text().startswith("<svg")

    def test_single_archive_surfaces_coincide(self, archive_dir, tmp_path):
        path = archive_dir / "clidemo_mocapo_seed0.json"
        report = tmp_path / "eas1.csv"
        assert run_cli("eas", "--archives", path, "--out", report) == 0
        rows = list(csv.DictReader(report.read_text().splitlines()))
        assert {int(r["level"]) for r in rows} == {1}  # best/median/worst collapse

    def test_trajectory_of_budget_zero_archive_is_single_point(self, config_path, tmp_path):
        out = tmp_path / "zero"
        run_cli("run", "--config", config_path, "--out", out, "--seed", "0",
                "--budget-tokens", "0")
        path = out / "clidemo_mocapo_seed0.json"
        report = tmp_path / "traj.csv"
        assert run_cli("trajectory", "--archives", path, "--metric", "pessimistic_hv",
                       "--n-pref", "16", "--out", report) == 0
        rows = list(csv.DictReader(report.read_text().splitlines()))
        assert len(rows) == 1
        assert rows[0]["step"] == "0"

    def test_trajectory_csv_carries_tt80_and_iter1(self, archive_dir, tmp_path):
        path = archive_dir / "clidemo_mocapo_seed0.json"
        report = tmp_path / "traj.csv"
        assert run_cli("trajectory", "--archives", path, "--metric", "pessimistic_hv",
                       "--n-pref", "16", "--out", report) == 0
        rows = list(csv.DictReader(report.read_text().splitlines()))
        assert len(rows) >= 2
        assert rows[0]["tt80"] != ""
        assert rows[0]["iter1"] == rows[-1]["iter1"] != ""


class TestCmdReplay:
    def test_replay_verifies_byte_identity(self, archive_dir, capsys):
        path = archive_dir / "clidemo_mocapo_seed0.json"
        run_cli("test-eval", "--archive", path)
        assert run_cli("replay", "--archive", path) == 0
        assert "byte-identically" in capsys.readouterr().out

    def test_replay_detects_tampered_run_data(self, archive_dir, capsys):
        path = archive_dir / "clidemo_mocapo_seed1.json"
        text = path.read_text()
        archive = RunArchive.read(path)
        consumed = archive.budget["consumed"]
        tampered = text.replace(f'"consumed":{consumed}', f'"consumed":{consumed + 1}', 1)
        assert tampered != text
        path.write_text(tampered)
        assert run_cli("replay", "--archive", path) == 1
        assert "FAILED" in capsys.readouterr().err
