import pytest

from mocapo.archive import ArchiveError, RunArchive, prompt_from_dict, prompt_to_dict
from mocapo.backends import CallParams, SimulatorEvalBackend, SimulatorMetaBackend, SimulatorProfile
from mocapo.optimizers import run_mocapo
from mocapo.tasks import make_synthetic_task
from mocapo.types import CostWeights, FewShotExample, OptimizerConfig, Prompt

from conftest import INSTRUCTIONS


@pytest.fixture(scope="module")
def small_result():
    task = make_synthetic_task(name="arch", dev_size=40, shots_size=10, test_size=10, gen_seed=0)
    profile = SimulatorProfile()
    config = OptimizerConfig(
        mu=4, block_size=10, crossovers=2, max_shots=2,
        budget_tokens=25_000, seed=7, weights=CostWeights(0.08, 0.32),
    )
    return run_mocapo(
        task, INSTRUCTIONS[:4], config,
        SimulatorEvalBackend(task, profile), SimulatorMetaBackend(profile),
        params=CallParams(seed=7),
    )


class TestPromptSerialization:
    def test_round_trip_preserves_identity(self):
        prompt = Prompt("Answer well.", (FewShotExample("in", "<final_answer>x</final_answer>"),))
        assert prompt_from_dict(prompt_to_dict(prompt)).id == prompt.id


class TestRunArchive:
    def test_round_trip(self, small_result, tmp_path):
        archive = RunArchive.from_result(small_result, {"seeds": [7], "demo": 1})
        path = archive.write(tmp_path / "run.json")
        loaded = RunArchive.read(path)
        assert loaded.final_front == archive.final_front
        assert loaded.snapshots == archive.snapshots
        assert loaded.history_records == archive.history_records
        assert loaded.to_json_str() == archive.to_json_str()

    def test_history_rebuild_matches_meter(self, small_result):
        archive = RunArchive.from_result(small_result, {"seeds": [7]})
        rebuilt = archive.rebuild_history()
        assert rebuilt.token_meter == small_result.history.token_meter
        assert len(rebuilt) == len(small_result.history)

    def test_every_front_prompt_is_archived(self, small_result):
        archive = RunArchive.from_result(small_result, {"seeds": [7]})
        for prompt in archive.front_prompts():
            assert prompt.id in archive.prompts

    def test_tampered_config_detected(self, small_result, tmp_path):
        archive = RunArchive.from_result(small_result, {"seeds": [7], "note": "original"})
        path = archive.write(tmp_path / "run.json")
        text = path.read_text().replace('"note":"original"', '"note":"edited"')
        path.write_text(text)
        with pytest.raises(ArchiveError, match="tampered"):
            RunArchive.read(path)

    def test_unsupported_schema_rejected(self, small_result, tmp_path):
        archive = RunArchive.from_result(small_result, {"seeds": [7]})
        text = archive.to_json_str().replace('"schema_version": 1', '"schema_version": 99')
        with pytest.raises(ArchiveError, match="schema"):
            RunArchive.from_json_str(text)

    def test_budget_trace_follows_snapshots(self, small_result):
        archive = RunArchive.from_result(small_result, {"seeds": [7]})
        assert [row[0] for row in archive.budget_trace] == [
            s["step"] for s in archive.snapshots
        ]
        tokens = [row[1] for row in archive.budget_trace]
        assert tokens == sorted(tokens)
