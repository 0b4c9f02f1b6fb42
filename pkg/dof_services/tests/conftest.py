import numpy as np
import pytest

from ..src.config import Settings, get_settings
from ..src.services.channel import SystemConfig, sample_channel
from ..src.services.designer import TransceiverDesigner
from ..src.services.verifier import DesignVerifier


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    for name in ("RELAY_DOF_THREADS", "RELAY_DOF_DEBUG", "RELAY_DOF_SENTRY_DSN"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def settings():
    return Settings(_env_file=None)


@pytest.fixture
def designer():
    return TransceiverDesigner()


@pytest.fixture
def verifier():
    return DesignVerifier()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def make_channel():
    def factory(M, N, K, seed=1):
        return sample_channel(SystemConfig(M=M, N=N, K=K), seed)
    return factory


@pytest.fixture
def build(designer, make_channel):
    """Select a strategy for (M, N, K) and design it on the channel drawn from `seed`."""
    def factory(M, N, K, seed=1):
        strategy = designer.select_strategy(M, N, K)
        return designer.design(make_channel(M, N, K, seed), strategy, seed=seed)
    return factory
