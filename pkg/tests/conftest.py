import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ghrcalc.linalg import QMatrix, QVector
from ghrcalc.quaternion import Quaternion

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

component = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
quaternions = st.builds(Quaternion, component, component, component, component)
nonzero_quaternions = quaternions.filter(lambda q: q.norm() > 0.1)


def qvectors(n: int):
    return st.lists(st.tuples(component, component, component, component), min_size=n, max_size=n).map(
        lambda rows: QVector(np.array(rows, dtype=float))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_qmatrix(rng, m, n):
    return QMatrix(rng.standard_normal((m, n, 4)))
