import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from graypixel.models import SceneSpec  # noqa: E402
from graypixel.services.synth import generate_scene  # noqa: E402

WARM_LIGHT = (0.8, 1.0, 0.6)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-resolution runtime checks")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def warm_scene():
    """Default patch grid (12 gray, 12 color) under a warm light."""
    return generate_scene(SceneSpec(seed=0, illuminant=WARM_LIGHT))


@pytest.fixture(scope="session")
def neutral_scene():
    return generate_scene(SceneSpec(seed=0))
