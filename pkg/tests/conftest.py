import pytest

from siaf.env_var_settings import siaf_environment
from siaf.sim import Simulator
from siaf.sim.cli.gen import generate
from siaf.sim.config import SimConfig
from siaf.sim.fault.registry import Registry
from tests import configure_inmemory_span_exporter


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    '''no SIAF_* variable from the calling shell leaks into a test'''
    for key in siaf_environment():
        monkeypatch.delenv(key, raising=False)
    yield
    Registry().clear()


@pytest.fixture
def simulator():
    return Simulator(SimConfig(), faults=[])


@pytest.fixture
def exporter(simulator):
    return configure_inmemory_span_exporter(simulator)


@pytest.fixture
def make_model():
    '''generated model factory: make_model(size_class, seed, time_steps, bias_bound)'''
    def factory(size_class='tiny', seed=0, time_steps=4, **kwargs):
        return generate(size_class, seed, time_steps, **kwargs)
    return factory


@pytest.fixture
def tiny_model(make_model):
    return make_model('tiny', 0)
