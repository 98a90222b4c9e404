"""Poses, rotation-representation conversions and the three pose-distance metrics.

Euler angles use the extrinsic fixed-axis XYZ convention: a triple
``(roll, pitch, yaw)`` rotates about world x, then world y, then world z, so
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.  Extracted triples keep pitch in
``[-pi/2, pi/2]`` and every component in ``(-pi, pi]``.

The Euler metric depends on this choice; other conventions give other numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .exceptions import InvalidOperandError
from .quatcore import (
    IDENTITY,
    UNIT_TOL,
    DualQuaternion,
    Quaternion,
    dq_from_pose,
    needs_sign_flip,
    quat_mul,
    quat_rotate,
)

__all__ = [
    "Pose",
    "MetricWeights",
    "Metric",
    "METRICS",
    "wrap_angle",
    "quat_from_euler",
    "quat_to_euler",
    "quat_to_matrix",
    "matrix_to_quat",
    "convert",
    "dq_metric",
    "euler_distance",
    "matrix_angle",
    "matrix_distance",
    "make_metric",
    "distance_terms",
]

Metric = Callable[["Pose", "Pose"], float]
METRICS = ("dq", "euler", "matrix")

_TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to ``(-pi, pi]``."""
    return math.pi - ((math.pi - a) % _TWO_PI)


def quat_from_euler(roll: float, pitch: float, yaw: float) -> Quaternion:
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    # qz(yaw) * qy(pitch) * qx(roll)
    return Quaternion(
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )


def _matrix_rows(q: Quaternion) -> tuple[tuple[float, float, float], ...]:
    w, x, y, z = q.w, q.x, q.y, q.z
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return (
        (1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)),
        (2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)),
        (2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)),
    )


def quat_to_matrix(q: Quaternion) -> np.ndarray:
    return np.array(_matrix_rows(q))


def quat_to_euler(q: Quaternion) -> tuple[float, float, float]:
    (r00, r01, r02), (r10, r11, r12), (r20, r21, r22) = _matrix_rows(q)
    pitch = math.atan2(-r20, math.hypot(r00, r10))
    roll = math.atan2(r21, r22)
    yaw = math.atan2(r10, r00)
    s = -r20
    # Near gimbal lock roll and yaw are individually ill-conditioned but one of
    # their sum/difference is not; rebuild that combination from entries that
    # stay well scaled so the rotation action survives a round trip.
    if s > 0.5:
        diff = yaw - roll
        diff += wrap_angle(math.atan2(r12 - r01, r11 + r02) - diff)
        total = roll + yaw
        roll, yaw = 0.5 * (total - diff), 0.5 * (total + diff)
    elif s < -0.5:
        total = roll + yaw
        total += wrap_angle(math.atan2(-(r12 + r01), r11 - r02) - total)
        diff = yaw - roll
        roll, yaw = 0.5 * (total - diff), 0.5 * (total + diff)
    return wrap_angle(roll), wrap_angle(pitch), wrap_angle(yaw)


def matrix_to_quat(m: np.ndarray | Sequence[Sequence[float]]) -> Quaternion:
    """Rotation matrix to unit quaternion (Shepperd's branch selection)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise InvalidOperandError(f"expected a 3x3 matrix, got shape {m.shape}")
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    quat = Quaternion(*(float(c) for c in q)).normalized()
    return quat if quat.w >= 0.0 else -quat


@dataclass(frozen=True, slots=True)
class Pose:
    """Rigid pose: world translation in meters plus a unit rotation quaternion.

    The quaternion is authoritative; ``euler_xyz`` and ``matrix`` are derived.
    """

    translation: tuple[float, float, float]
    rotation: Quaternion = IDENTITY

    def __post_init__(self):
        t = self.translation
        if len(t) != 3:
            raise InvalidOperandError(f"translation must have 3 components, got {len(t)}")
        if not isinstance(t, tuple) or not all(type(c) is float for c in t):
            object.__setattr__(self, "translation", (float(t[0]), float(t[1]), float(t[2])))
        if not self.rotation.is_unit(UNIT_TOL):
            raise InvalidOperandError(f"rotation is not a unit quaternion (|q| = {self.rotation.norm():.3g})")

    @classmethod
    def identity(cls) -> Pose:
        return cls((0.0, 0.0, 0.0), IDENTITY)

    @classmethod
    def from_euler(cls, translation: Sequence[float], euler_xyz: Sequence[float]) -> Pose:
        return cls(tuple(translation), quat_from_euler(*euler_xyz))

    @classmethod
    def from_matrix(cls, translation: Sequence[float], matrix) -> Pose:
        return cls(tuple(translation), matrix_to_quat(matrix))

    @classmethod
    def from_homogeneous(cls, T) -> Pose:
        T = np.asarray(T, dtype=float)
        return cls.from_matrix(T[:3, 3], T[:3, :3])

    @property
    def euler_xyz(self) -> tuple[float, float, float]:
        return quat_to_euler(self.rotation)

    @property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    @property
    def homogeneous(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.matrix
        T[:3, 3] = self.translation
        return T

    @property
    def dq(self) -> DualQuaternion:
        return dq_from_pose(self.rotation, self.translation)

    def transform_point(self, p: Sequence[float]) -> tuple[float, float, float]:
        rx, ry, rz = quat_rotate(self.rotation, p)
        tx, ty, tz = self.translation
        return (rx + tx, ry + ty, rz + tz)

    def compose(self, other: Pose) -> Pose:
        """``self * other``: express ``other`` (given in this frame) in the world."""
        return Pose(self.transform_point(other.translation), quat_mul(self.rotation, other.rotation))

    def inverse(self) -> Pose:
        qi = self.rotation.conjugate()
        tx, ty, tz = quat_rotate(qi, self.translation)
        return Pose((-tx, -ty, -tz), qi)


def convert(p: Pose) -> dict:
    """All three rotation views of ``p``."""
    return {"quaternion": p.rotation, "euler_xyz": p.euler_xyz, "matrix": p.matrix}


@dataclass(frozen=True)
class MetricWeights:
    """Scale factors balancing translation (``psi``) against rotation (``mu``, ``beta``)."""

    psi: float = 2.1
    mu: float = 0.32
    beta: float = 0.32

    def __post_init__(self):
        for name in ("psi", "mu", "beta"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be strictly positive, got {v!r}")


DEFAULT_WEIGHTS = MetricWeights()


def _translation_gap(p1: Pose, p2: Pose) -> float:
    a, b = p1.translation, p2.translation
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _euler_gap(p1: Pose, p2: Pose) -> float:
    e1, e2 = p1.euler_xyz, p2.euler_xyz
    return math.sqrt(sum(wrap_angle(a - b) ** 2 for a, b in zip(e1, e2)))


def _dq_pose_terms(p1: Pose, p2: Pose) -> tuple[float, float]:
    """``(dq_distance, dq_rotation_distance)`` of two poses on raw floats.

    Same steps as building both dual quaternions and calling
    :func:`~dqhandover.quatcore.dq_distance`: conjugate-multiply, canonicalize,
    subtract the identity, take the 2-norm.  Fused because the simulator calls it
    several times per control step.
    """
    a, b = p1.rotation, p2.rotation
    (ax, ay, az), (bx, by, bz) = p1.translation, p2.translation
    # dual parts 0.5 * t * q
    da_w = -0.5 * (ax * a.x + ay * a.y + az * a.z)
    da_x = 0.5 * (ax * a.w + ay * a.z - az * a.y)
    da_y = 0.5 * (-ax * a.z + ay * a.w + az * a.x)
    da_z = 0.5 * (ax * a.y - ay * a.x + az * a.w)
    db_w = -0.5 * (bx * b.x + by * b.y + bz * b.z)
    db_x = 0.5 * (bx * b.w + by * b.z - bz * b.y)
    db_y = 0.5 * (-bx * b.z + by * b.w + bz * b.x)
    db_z = 0.5 * (bx * b.y - by * b.x + bz * b.w)
    # primary: a* b
    aw, axx, ayy, azz = a.w, -a.x, -a.y, -a.z
    pw = aw * b.w - axx * b.x - ayy * b.y - azz * b.z
    px = aw * b.x + axx * b.w + ayy * b.z - azz * b.y
    py = aw * b.y - axx * b.z + ayy * b.w + azz * b.x
    pz = aw * b.z + axx * b.y - ayy * b.x + azz * b.w
    # dual: a* db + da* b
    cw, cx, cy, cz = da_w, -da_x, -da_y, -da_z
    dw = (aw * db_w - axx * db_x - ayy * db_y - azz * db_z) + (cw * b.w - cx * b.x - cy * b.y - cz * b.z)
    dx = (aw * db_x + axx * db_w + ayy * db_z - azz * db_y) + (cw * b.x + cx * b.w + cy * b.z - cz * b.y)
    dy = (aw * db_y - axx * db_z + ayy * db_w + azz * db_x) + (cw * b.y - cx * b.z + cy * b.w + cz * b.x)
    dz = (aw * db_z + axx * db_y - ayy * db_x + azz * db_w) + (cw * b.z + cx * b.y - cy * b.x + cz * b.w)
    if needs_sign_flip(pw, px, py, pz):
        pw, px, py, pz = -pw, -px, -py, -pz
    rot2 = (pw - 1.0) ** 2 + px * px + py * py + pz * pz
    dual2 = dw * dw + dx * dx + dy * dy + dz * dz
    return math.sqrt(rot2 + dual2), math.sqrt(rot2)


def dq_metric(p1: Pose, p2: Pose, w: MetricWeights | None = None) -> float:
    """Dual-quaternion distance between two poses (``w`` is accepted and ignored)."""
    return _dq_pose_terms(p1, p2)[0]


def euler_distance(p1: Pose, p2: Pose, w: MetricWeights = DEFAULT_WEIGHTS) -> float:
    """``psi * |t1 - t2| + mu * |wrap(e1 - e2)|``.

    Each Euler-angle difference is wrapped to ``(-pi, pi]`` before taking the
    2-norm; without it the value jumps by ``2 pi mu`` across the angle seam.
    """
    return w.psi * _translation_gap(p1, p2) + w.mu * _euler_gap(p1, p2)


def matrix_angle(p1: Pose, p2: Pose) -> float:
    """Relative rotation angle ``acos((tr(R1^T R2) - 1) / 2)`` in ``[0, pi]``.

    Evaluated as ``atan2(sin, cos)`` with the sine taken from the skew part of
    ``R1^T R2``.  Same value, but a bare acos near 0 turns 1e-16 trace
    round-off into 1e-8 of angle.
    """
    R = p1.matrix.T @ p2.matrix
    c = (R[0, 0] + R[1, 1] + R[2, 2] - 1.0) / 2.0
    s = 0.5 * math.sqrt((R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2)
    return math.atan2(s, min(1.0, max(-1.0, c)))


def matrix_distance(p1: Pose, p2: Pose, w: MetricWeights = DEFAULT_WEIGHTS) -> float:
    return w.psi * _translation_gap(p1, p2) + w.beta * matrix_angle(p1, p2)


_METRIC_FUNCS = {"dq": dq_metric, "euler": euler_distance, "matrix": matrix_distance}


def make_metric(name: str, weights: MetricWeights = DEFAULT_WEIGHTS) -> Metric:
    """Bind a metric by name to its weights, giving a ``(Pose, Pose) -> float`` callable."""
    try:
        fn = _METRIC_FUNCS[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}; expected one of {METRICS}") from None
    if name == "dq":
        return dq_metric
    return partial(fn, w=weights)


def distance_terms(
    name: str, p1: Pose, p2: Pose, weights: MetricWeights = DEFAULT_WEIGHTS
) -> tuple[float, float, float]:
    """``(global, translation, rotation)`` for one metric.

    ``translation`` is always the Euclidean gap in meters.  ``rotation`` is the
    metric's own unscaled rotation term: the primary-part norm of the
    dual-quaternion difference, the wrapped Euler-difference norm, or the
    relative matrix angle.
    """
    trans = _translation_gap(p1, p2)
    if name == "dq":
        d, rot = _dq_pose_terms(p1, p2)
        return d, trans, rot
    if name == "euler":
        rot = _euler_gap(p1, p2)
        return weights.psi * trans + weights.mu * rot, trans, rot
    if name == "matrix":
        rot = matrix_angle(p1, p2)
        return weights.psi * trans + weights.beta * rot, trans, rot
    raise ValueError(f"unknown metric {name!r}; expected one of {METRICS}")
