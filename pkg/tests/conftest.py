import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from paravolt.gridfn import GridSpec  # noqa: E402
from paravolt.spectral import build_partition  # noqa: E402

settings.register_profile("paravolt", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("paravolt")


@pytest.fixture(scope="session")
def spec():
    return GridSpec(4096, 2.0)


@pytest.fixture(scope="session")
def part(spec):
    return build_partition(spec)


@pytest.fixture(scope="session")
def small_spec():
    return GridSpec(256, 2.0)


@pytest.fixture(scope="session")
def small_part(small_spec):
    return build_partition(small_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
