import numpy as np
import pytest
from hypothesis import settings

from landscape_lab.activations import builtin
from landscape_lab.network import NetSpec, random_dataset, random_weights

ACCEPTANCE_LINES: list[str] = []

# `pytest --hypothesis-profile=stress` for a deeper property run
settings.register_profile("stress", max_examples=1000, deadline=None)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_exp_instance():
    spec = NetSpec((2, 5, 1), builtin("exp"))
    data = random_dataset(2, 1, 4, seed=3)
    w = random_weights(spec, seed=4, scale=0.5)
    return spec, data, w
