import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from gqmet.core import GaussianState, thermal_occupation

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

NBAR_1 = thermal_occupation(1.0, 1.0)


@st.composite
def physical_states(draw, with_mean=True):
    """Random physical single-mode states: rotated squeezed thermal states."""
    nu = draw(st.floats(1.0, 20.0))
    r = draw(st.floats(-1.5, 1.5))
    angle = draw(st.floats(0.0, np.pi))
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    cov = nu * rot @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rot.T
    cov = 0.5 * (cov + cov.T)
    mean = np.zeros(2)
    if with_mean:
        mean = np.array([draw(st.floats(-3, 3)), draw(st.floats(-3, 3))])
    return GaussianState(mean, cov)


@pytest.fixture
def nbar1():
    return NBAR_1
