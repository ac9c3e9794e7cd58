import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from decaylab.damping import DampingSpec, build_damping
from decaylab.geometry import DomainSpec, MetricSpec, assemble
from decaylab.spectral import eigendecompose

settings.register_profile("decaylab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("decaylab")


def unit_interval(boundary="dirichlet", N=256, metric=None):
    return assemble(DomainSpec("interval", boundary, N), metric or MetricSpec())


@pytest.fixture(scope="session")
def dirichlet_256():
    op = unit_interval("dirichlet", 256)
    return op, eigendecompose(op)


@pytest.fixture(scope="session")
def neumann_256():
    op = unit_interval("neumann", 256)
    return op, eigendecompose(op)


@pytest.fixture(scope="session")
def dirichlet_1024():
    op = unit_interval("dirichlet", 1024)
    return op, eigendecompose(op, 128)


@pytest.fixture(scope="session")
def fat_cantor_1024(dirichlet_1024):
    op, basis = dirichlet_1024
    return build_damping(DampingSpec("fat_cantor", height=1.0, level=6, measure=0.5), op)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
