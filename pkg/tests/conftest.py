"""Shared fixtures: a small synthetic task, simulator backends, instructions."""

import pytest

from mocapo.backends import CallParams, SimulatorEvalBackend, SimulatorMetaBackend, SimulatorProfile
from mocapo.tasks import make_synthetic_task
from mocapo.types import CostWeights, OptimizerConfig

INSTRUCTIONS = [
    "Label the input.",
    "Decide which label fits the given input and answer between <final_answer></final_answer> markers.",
    "Pick the correct label for this input and wrap it in final answer markers.",
    "Classify the following input into one of the known labels.",
    "Read the input and answer with the matching label inside the markers.",
    "Assign a label.",
    "Choose the label that best matches the input text and give it between the markers.",
    "Look at the input and reply with its label.",
    "Determine the right label for each input and put it between final answer markers.",
    "State the label for the input below.",
]


@pytest.fixture(scope="session")
def task():
    return make_synthetic_task(
        name="unit", dev_size=60, shots_size=20, test_size=40, n_classes=2, gen_seed=0
    )


@pytest.fixture(scope="session")
def profile():
    return SimulatorProfile()


@pytest.fixture()
def eval_backend(task, profile):
    return SimulatorEvalBackend(task, profile)


@pytest.fixture()
def meta_backend(profile):
    return SimulatorMetaBackend(profile)


@pytest.fixture()
def small_config():
    return OptimizerConfig(
        mu=10,
        block_size=10,
        crossovers=4,
        max_shots=5,
        weights=CostWeights(0.08, 0.32),
        budget_tokens=120_000,
        step_cap=2000,
        seed=1,
    )


@pytest.fixture()
def call_params(small_config):
    return CallParams(seed=small_config.seed)


@pytest.fixture()
def instructions():
    return list(INSTRUCTIONS)
