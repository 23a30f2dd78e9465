import os

import pytest
from hypothesis import HealthCheck, settings

from ringlink.scenario import Scenario

settings.register_profile("default", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")


@pytest.fixture
def nominal():
    return Scenario(seed=11)


@pytest.fixture
def scenario_dir():
    return os.path.abspath(SCENARIO_DIR)
