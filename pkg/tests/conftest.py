import pytest
from hypothesis import settings

from substochastic.zoo import (
    bd_conservative,
    bd_kill,
    closed_chain,
    pure_loss,
    quadratic_birth,
    two_state,
    yule,
    zoo_models,
)

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def m_two_state():
    return two_state()


@pytest.fixture(scope="session")
def m_yule():
    return yule()


@pytest.fixture(scope="session")
def m_quadratic():
    return quadratic_birth()


@pytest.fixture(scope="session")
def m_pure_loss():
    return pure_loss()


@pytest.fixture(scope="session")
def m_bd_kill():
    return bd_kill()


@pytest.fixture(scope="session")
def m_bd_conservative():
    return bd_conservative()


@pytest.fixture(scope="session")
def m_closed_chain():
    return closed_chain()


@pytest.fixture(scope="session")
def zoo():
    return zoo_models()
