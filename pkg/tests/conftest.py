import math

import numpy as np
import pytest
from hypothesis import strategies as st

from attikit import quat


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def unit_quats(draw):
    """Uniformly distributed unit quaternions via axis-angle sampling."""
    angle = draw(st.floats(min_value=0.0, max_value=math.pi))
    ax = draw(st.floats(min_value=-1.0, max_value=1.0))
    ay = draw(st.floats(min_value=-1.0, max_value=1.0))
    az = draw(st.floats(min_value=-1.0, max_value=1.0))
    v = np.array([ax, ay, az])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v = np.array([0.0, 0.0, 1.0])
        n = 1.0
    return quat.axis_angle_to_quat(v / n, angle)


@st.composite
def unit_axes(draw):
    ax = draw(st.floats(min_value=-1.0, max_value=1.0))
    ay = draw(st.floats(min_value=-1.0, max_value=1.0))
    az = draw(st.floats(min_value=-1.0, max_value=1.0))
    v = np.array([ax, ay, az])
    n = np.linalg.norm(v)
    if n < 1e-3:
        return np.array([1.0, 0.0, 0.0])
    return v / n
