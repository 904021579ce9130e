import pytest

from aerolay.config import ScenarioConfig


@pytest.fixture(scope="session")
def cfg():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def cfg_full():
    """Every UAV pair active on every PRB."""
    return ScenarioConfig(eta_u=1.0)
