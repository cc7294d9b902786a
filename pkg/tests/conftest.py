import numpy as np
import pytest

from bell_lab.behavior import CHSH_SCENARIO, chsh_expression


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def chsh():
    return chsh_expression()


@pytest.fixture
def chsh_scenario():
    return CHSH_SCENARIO
