import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from dqhandover.quatcore import Quaternion, dq_from_pose
from dqhandover.se3metrics import Pose

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


def random_quat(rng: np.random.Generator) -> Quaternion:
    v = rng.normal(size=4)
    return Quaternion.from_array(v / np.linalg.norm(v))


def random_pose(rng: np.random.Generator, scale: float = 1.0) -> Pose:
    return Pose(tuple(rng.uniform(-scale, scale, 3)), random_quat(rng))


def random_dq(rng: np.random.Generator):
    return dq_from_pose(random_quat(rng), rng.uniform(-1, 1, 3))


def homogeneous(q: Quaternion, t) -> np.ndarray:
    """4x4 transform built through scipy, independent of our conversions."""
    from scipy.spatial.transform import Rotation

    T = np.eye(4)
    T[:3, :3] = Rotation.from_quat([q.x, q.y, q.z, q.w]).as_matrix()
    T[:3, 3] = t
    return T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


finite = st.floats(-1.0, 1.0, allow_nan=False)
unit_quats = st.tuples(finite, finite, finite, finite).filter(
    lambda v: math.sqrt(sum(c * c for c in v)) > 1e-3
).map(lambda v: Quaternion.from_array(np.asarray(v) / np.linalg.norm(v)))
translations = st.tuples(finite, finite, finite)
poses = st.builds(lambda t, q: Pose(t, q), translations, unit_quats)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
