import numpy as np
import pytest
from hypothesis import settings

from thetaflow.flows import CANONICAL19
from thetaflow.qseries import Moebius, closed_form_state

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

STANDARD_TAU = 0.1 + 1.1j
STANDARD_MOEBIUS = Moebius(1, 0, 0.2, 1)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture
def theta_state():
    """A Canonical19 state generated from theta-constants away from singular sets."""
    return closed_form_state(CANONICAL19, STANDARD_TAU, STANDARD_MOEBIUS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
