import os
import sys

# no log file during tests; must be set before config.settings is imported
os.environ["LOG_FILE"] = ""

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

import numpy as np
import pytest

from graphs import build_complete, build_cycle, shell_descriptor


@pytest.fixture
def cycle6():
    return build_cycle(6, {0})


@pytest.fixture
def cycle6_shells(cycle6):
    return shell_descriptor(cycle6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def shell_cases():
    """Shell descriptions with diameters 1, 2 and 3"""
    return {
        1: shell_descriptor(build_complete(5, {0})),
        2: shell_descriptor(build_cycle(5, {0})),
        3: shell_descriptor(build_cycle(6, {0})),
    }
