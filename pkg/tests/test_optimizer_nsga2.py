from mocapo import moo
from mocapo.backends import CallParams, SimulatorEvalBackend, SimulatorMetaBackend, SimulatorProfile
from mocapo.optimizers import run_mocapo, run_nsga2po
from mocapo.tasks import make_synthetic_task
from mocapo.types import CostWeights, OptimizerConfig

from conftest import INSTRUCTIONS


def run_baseline(seed=1, budget=150_000, iterations=None, observer=None, mu=10):
    task = make_synthetic_task(name="base", dev_size=60, shots_size=20, test_size=20, gen_seed=0)
    profile = SimulatorProfile()
    config = OptimizerConfig(
        mu=mu, block_size=10, crossovers=4, max_shots=5,
        budget_tokens=budget, seed=seed, iterations=iterations,
        weights=CostWeights(0.08, 0.32),
    )
    return run_nsga2po(
        task,
        INSTRUCTIONS[:mu],
        config,
        SimulatorEvalBackend(task, profile),
        SimulatorMetaBackend(profile),
        params=CallParams(seed=seed),
        observer=observer,
    )


class TestRunNsga2po:
    def test_every_candidate_carries_full_evaluation(self):
        result = run_baseline(iterations=2)
        all_blocks = frozenset(b.index for b in result.blocks)
        for pid in result.history.prompt_ids():
            assert result.history.evaluated_blocks(pid) == all_blocks

    def test_steady_state_population_arithmetic(self):
        sizes = []

        def observer(event, payload):
            if event == "boundary":
                sizes.append(len(payload["population"]))

        result = run_baseline(iterations=3, observer=observer)
        assert sizes and all(size == 10 for size in sizes)
        assert len(result.population) == 10

    def test_final_front_is_non_dominated(self):
        result = run_baseline(iterations=2)
        vectors = list(result.front_vectors.values())
        assert moo.non_dominated_indices(vectors) == list(range(len(vectors)))
        assert set(result.front_ids) <= {p.id for p in result.population}

    def test_seeded_determinism(self):
        a = run_baseline(seed=3, iterations=2)
        b = run_baseline(seed=3, iterations=2)
        assert a.front_ids == b.front_ids
        assert a.snapshots == b.snapshots

    def test_budget_zero_keeps_only_initialization(self):
        result = run_baseline(budget=0)
        assert result.meter.step_count == 0
        assert len(result.history) == 10 * len(result.blocks)
        assert len(result.snapshots) == 1

    def test_graceful_budget_stop(self):
        result = run_baseline(budget=90_000)
        assert result.stopped_early
        assert result.front_ids  # a usable front survives the abort

    def test_fewer_distinct_candidates_than_intensification(self):
        """Desk-scale analogue of the candidate-count efficiency gap."""
        task = make_synthetic_task(name="cmp", dev_size=60, shots_size=20, test_size=20, gen_seed=0)
        profile = SimulatorProfile()
        config = OptimizerConfig(
            mu=10, block_size=10, crossovers=4, max_shots=5,
            budget_tokens=120_000, seed=2, weights=CostWeights(0.08, 0.32),
        )
        params = CallParams(seed=2)
        racing = run_mocapo(
            task, INSTRUCTIONS, config,
            SimulatorEvalBackend(task, profile), SimulatorMetaBackend(profile),
            params=params,
        )
        full = run_nsga2po(
            task, INSTRUCTIONS, config,
            SimulatorEvalBackend(task, profile), SimulatorMetaBackend(profile),
            params=params,
        )
        assert len(racing.history.prompt_ids()) > len(full.history.prompt_ids())
