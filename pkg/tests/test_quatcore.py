import math

import numpy as np
import pytest
from hypothesis import given

from conftest import homogeneous, random_dq, random_quat, translations, unit_quats
from dqhandover.exceptions import InvalidOperandError
from dqhandover.quatcore import (
    DQ_IDENTITY,
    IDENTITY,
    DualQuaternion,
    Quaternion,
    canonicalize,
    dq_conj,
    dq_diff,
    dq_distance,
    dq_from_pose,
    dq_mul,
    dq_rotation_distance,
    dq_to_pose,
    quat_from_axis_angle,
    quat_mul,
    quat_rotate,
)


def close(a, b, tol=1e-9):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) < tol


def same_dq(a: DualQuaternion, b: DualQuaternion, tol=1e-9):
    return close(canonicalize(a).as_array(), canonicalize(b).as_array(), tol)


# --- quaternions -------------------------------------------------------------

def test_identity_is_neutral(rng):
    q = random_quat(rng)
    assert quat_mul(IDENTITY, q) == q
    assert quat_mul(q, IDENTITY) == q


def test_basis_axioms():
    i, j, k = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)
    assert i * j == k
    assert j * k == i
    assert k * i == j
    assert i * i == Quaternion(-1, 0, 0, 0)


def test_quat_mul_matches_matrix_product(rng):
    from scipy.spatial.transform import Rotation

    for _ in range(200):
        a, b = random_quat(rng), random_quat(rng)
        ab = a * b
        Ra = Rotation.from_quat([a.x, a.y, a.z, a.w]).as_matrix()
        Rb = Rotation.from_quat([b.x, b.y, b.z, b.w]).as_matrix()
        Rab = Rotation.from_quat([ab.x, ab.y, ab.z, ab.w]).as_matrix()
        assert close(Rab, Ra @ Rb)
        assert abs(ab.norm() - 1) < 1e-9


def test_quat_rotate_matches_scipy(rng):
    from scipy.spatial.transform import Rotation

    for _ in range(100):
        q = random_quat(rng)
        v = rng.normal(size=3)
        assert close(quat_rotate(q, v), Rotation.from_quat([q.x, q.y, q.z, q.w]).apply(v))


def test_axis_angle():
    q = quat_from_axis_angle((0, 0, 2), math.pi / 2)
    assert close(quat_rotate(q, (1, 0, 0)), (0, 1, 0))
    assert quat_from_axis_angle((0, 0, 0), 1.0) == IDENTITY


def test_normalize_zero_raises():
    with pytest.raises(InvalidOperandError):
        Quaternion(0, 0, 0, 0).normalized()


# --- dual quaternions ----------------------------------------------------------

def test_dq_identity_neutral(rng):
    a = random_dq(rng)
    assert same_dq(dq_mul(DQ_IDENTITY, a), a)
    assert same_dq(dq_mul(a, DQ_IDENTITY), a)


def test_pure_translations_add():
    a = dq_from_pose(IDENTITY, (0.1, -0.2, 0.3))
    b = dq_from_pose(IDENTITY, (0.5, 0.5, -1.0))
    rot, t = dq_to_pose(dq_mul(a, b))
    assert rot == IDENTITY
    assert close(t, (0.6, 0.3, -0.7))


def test_dq_mul_matches_homogeneous_composition(rng):
    for _ in range(1000):
        qa, qb = random_quat(rng), random_quat(rng)
        ta, tb = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        ab = dq_mul(dq_from_pose(qa, ta), dq_from_pose(qb, tb))
        T = homogeneous(qa, ta) @ homogeneous(qb, tb)
        q, t = dq_to_pose(ab)
        assert close(homogeneous(q, t), T)
        assert ab.is_unit(1e-9)


def test_dq_mul_against_matrix_oracle_via_pose_constructor(rng):
    from scipy.spatial.transform import Rotation

    for _ in range(100):
        qa, qb = random_quat(rng), random_quat(rng)
        ta, tb = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        T = homogeneous(qa, ta) @ homogeneous(qb, tb)
        x, y, z, w = Rotation.from_matrix(T[:3, :3]).as_quat()
        expected = dq_from_pose(Quaternion(w, x, y, z), T[:3, 3])
        assert same_dq(dq_mul(dq_from_pose(qa, ta), dq_from_pose(qb, tb)), expected)


def test_conjugate_examples():
    assert dq_conj(DQ_IDENTITY) == DQ_IDENTITY
    _, t = dq_to_pose(dq_conj(dq_from_pose(IDENTITY, (0.3, -0.1, 2.0))))
    assert close(t, (-0.3, 0.1, -2.0))


def test_conjugate_is_inverse(rng):
    for _ in range(1000):
        a = random_dq(rng)
        assert same_dq(dq_mul(a, dq_conj(a)), DQ_IDENTITY)
        assert same_dq(dq_mul(dq_conj(a), a), DQ_IDENTITY)


def test_dq_diff_examples(rng):
    for _ in range(100):
        a, b = random_dq(rng), random_dq(rng)
        assert same_dq(dq_diff(a, a), DQ_IDENTITY)
        assert same_dq(dq_diff(DQ_IDENTITY, b), b)
        assert same_dq(dq_mul(a, dq_diff(a, b)), b)


def test_dq_diff_rejects_non_unit():
    bad = DualQuaternion(Quaternion(2, 0, 0, 0), Quaternion(0, 0, 0, 0))
    with pytest.raises(InvalidOperandError):
        dq_diff(bad, DQ_IDENTITY)
    with pytest.raises(InvalidOperandError):
        dq_diff(DQ_IDENTITY, bad)
    not_orthogonal = DualQuaternion(IDENTITY, Quaternion(0.1, 0, 0, 0))
    with pytest.raises(InvalidOperandError):
        dq_distance(DQ_IDENTITY, not_orthogonal)


def test_from_pose_examples():
    assert dq_from_pose(IDENTITY, (0, 0, 0)) == DQ_IDENTITY
    a = dq_from_pose(IDENTITY, (1, 0, 0))
    assert a.primary == IDENTITY
    assert a.dual == Quaternion(0, 0.5, 0, 0)
    assert dq_to_pose(DQ_IDENTITY) == (IDENTITY, (0.0, 0.0, 0.0))
    assert dq_to_pose(DualQuaternion(IDENTITY, Quaternion(0, 0.5, 0, 0))) == (IDENTITY, (1.0, 0.0, 0.0))


def test_from_pose_rejects_non_unit_rotation():
    with pytest.raises(InvalidOperandError):
        dq_from_pose(Quaternion(1, 1, 0, 0), (0, 0, 0))
    with pytest.raises(InvalidOperandError):
        dq_to_pose(DualQuaternion(Quaternion(0.5, 0, 0, 0), Quaternion(0, 0, 0, 0)))


def test_pose_round_trip(rng):
    worst = 0.0
    for _ in range(1000):
        q, t = random_quat(rng), rng.uniform(-2, 2, 3)
        q2, t2 = dq_to_pose(dq_from_pose(q, t))
        qc = q if q.w >= 0 else -q
        worst = max(worst, np.max(np.abs(q2.as_array() - qc.as_array())), np.max(np.abs(np.subtract(t2, t))))
    assert worst < 1e-9


def test_canonical_sign(rng):
    for _ in range(100):
        a = random_dq(rng)
        assert canonicalize(-a) == canonicalize(a)
        assert canonicalize(a).primary.w >= 0
    # zero scalar part: first non-zero vector component decides
    flipped = canonicalize(DualQuaternion(Quaternion(0, 0, -1, 0), Quaternion(0, 0, 0, 0)))
    assert flipped.primary == Quaternion(0, 0, 1, 0)


def test_unit_closure_under_repeated_products(rng):
    a = DQ_IDENTITY
    step = random_dq(rng)
    for _ in range(5000):
        a = dq_mul(a, step)
    assert a.is_unit(1e-9)


# --- distances -------------------------------------------------------------------

def test_distance_translation_only():
    a = dq_from_pose(IDENTITY, (0.2, 0.0, 0.0))
    b = dq_from_pose(IDENTITY, (0.2, 0.3, 0.4))
    assert abs(dq_distance(a, b) - 0.25) < 1e-12
    assert dq_distance(a, a) == 0.0
    assert dq_rotation_distance(a, b) == 0.0


@pytest.mark.parametrize("theta", [0.1, 1.0, math.pi / 2, 2.5, math.pi])
def test_distance_rotation_only(theta):
    a = DQ_IDENTITY
    b = dq_from_pose(quat_from_axis_angle((1, 2, 3), theta), (0, 0, 0))
    assert abs(dq_distance(a, b) - 2 * abs(math.sin(theta / 4))) < 1e-12
    assert abs(dq_rotation_distance(a, b) - 2 * abs(math.sin(theta / 4))) < 1e-12


def test_rotation_distance_examples():
    assert abs(dq_rotation_distance(DQ_IDENTITY, dq_from_pose(quat_from_axis_angle((0, 0, 1), math.pi), (0, 0, 0)))
               - math.sqrt(2)) < 1e-12
    b = dq_from_pose(quat_from_axis_angle((0, 1, 0), math.pi / 2), (0, 0, 0))
    assert abs(dq_rotation_distance(DQ_IDENTITY, b) - 0.76537) < 1e-5


def test_translation_decoupling(rng):
    for _ in range(200):
        qa, qb = random_quat(rng), random_quat(rng)
        t = rng.uniform(-1, 1, 3)
        offset = rng.uniform(-1, 1, 3)
        d0 = dq_rotation_distance(dq_from_pose(qa, t), dq_from_pose(qb, t))
        d1 = dq_rotation_distance(dq_from_pose(qa, t + offset), dq_from_pose(qb, rng.uniform(-1, 1, 3)))
        assert abs(d0 - d1) < 1e-12


@given(unit_quats, translations, unit_quats, translations)
def test_distance_symmetric_and_nonnegative(qa, ta, qb, tb):
    a, b = dq_from_pose(qa, ta), dq_from_pose(qb, tb)
    d = dq_distance(a, b)
    assert d >= 0
    assert abs(d - dq_distance(b, a)) < 1e-9


@given(unit_quats, translations)
def test_distance_zero_on_double_cover(q, t):
    a = dq_from_pose(q, t)
    assert dq_distance(a, -a) < 1e-9
    assert dq_distance(a, DualQuaternion(-a.primary, -a.dual)) < 1e-9
