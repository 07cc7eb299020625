import numpy as np
import pytest
from hypothesis import settings

from nilscope import systems

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spec():
    return systems.default_heisenberg()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
