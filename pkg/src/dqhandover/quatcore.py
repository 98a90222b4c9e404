"""Quaternion and dual-quaternion algebra for rigid transforms.

Conventions
-----------
* Quaternions are scalar-first ``(w, x, y, z)`` and multiply with the
  Hamilton product (``i * j = k``).
* A unit dual quaternion ``p + eps * d`` encodes the homogeneous transform
  ``[R | t]`` with ``p`` the rotation and ``d = 0.5 * t * p``, where ``t`` is the
  world-frame translation written as a pure quaternion.  Writing the body-frame
  translation ``t_b = R^T t`` instead gives the equivalent ``d = 0.5 * p * t_b``.
* ``q`` and ``-q`` describe the same pose.  :func:`canonicalize` picks the
  representative with a non-negative scalar part so that distances computed from
  a difference are single-valued.

Everything here works on plain Python floats: the values are tiny and the
simulator evaluates them in tight loops, where numpy's per-call overhead
dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidOperandError

__all__ = [
    "Quaternion",
    "DualQuaternion",
    "IDENTITY",
    "DQ_IDENTITY",
    "UNIT_TOL",
    "quat_mul",
    "quat_from_axis_angle",
    "quat_rotate",
    "dq_mul",
    "dq_conj",
    "dq_diff",
    "dq_from_pose",
    "dq_to_pose",
    "dq_distance",
    "dq_rotation_distance",
    "canonicalize",
]

# Input validation tolerance; post-conditions are asserted at 1e-9 in the tests.
UNIT_TOL = 1e-6
# Norm drift beyond this is projected back onto the unit manifold after dq_mul.
_DRIFT_TOL = 1e-12
_SIGN_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> Quaternion:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def pure(cls, v: Sequence[float]) -> Quaternion:
        """Pure quaternion ``(0, v)`` used to carry a translation."""
        return cls(0.0, float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def from_array(cls, a: Iterable[float]) -> Quaternion:
        w, x, y, z = (float(c) for c in a)
        return cls(w, x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def vector(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def conjugate(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def dot(self, other: Quaternion) -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> Quaternion:
        n = self.norm()
        if n == 0.0:
            raise InvalidOperandError("cannot normalize a zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def scale(self, s: float) -> Quaternion:
        return Quaternion(s * self.w, s * self.x, s * self.y, s * self.z)

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Quaternion:
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: Quaternion) -> Quaternion:
        return quat_mul(self, other)


IDENTITY = Quaternion(1.0, 0.0, 0.0, 0.0)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a * b``."""
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> Quaternion:
    ax, ay, az = (float(c) for c in axis)
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        return IDENTITY
    s = math.sin(0.5 * angle) / n
    return Quaternion(math.cos(0.5 * angle), ax * s, ay * s, az * s)


def quat_rotate(q: Quaternion, v: Sequence[float]) -> tuple[float, float, float]:
    """Rotate the 3-vector ``v`` by the unit quaternion ``q``."""
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    # v' = v + 2w (u x v) + 2 u x (u x v), u = vector part
    ux, uy, uz, w = q.x, q.y, q.z, q.w
    cx = uy * vz - uz * vy
    cy = uz * vx - ux * vz
    cz = ux * vy - uy * vx
    ccx = uy * cz - uz * cy
    ccy = uz * cx - ux * cz
    ccz = ux * cy - uy * cx
    return (
        vx + 2.0 * (w * cx + ccx),
        vy + 2.0 * (w * cy + ccy),
        vz + 2.0 * (w * cz + ccz),
    )


@dataclass(frozen=True, slots=True)
class DualQuaternion:
    primary: Quaternion
    dual: Quaternion

    @classmethod
    def identity(cls) -> DualQuaternion:
        return cls(IDENTITY, Quaternion(0.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_array(cls, a: Iterable[float]) -> DualQuaternion:
        c = [float(v) for v in a]
        if len(c) != 8:
            raise InvalidOperandError(f"expected 8 components, got {len(c)}")
        return cls(Quaternion(*c[:4]), Quaternion(*c[4:]))

    def as_array(self) -> np.ndarray:
        p, d = self.primary, self.dual
        return np.array([p.w, p.x, p.y, p.z, d.w, d.x, d.y, d.z])

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        # ||q^|| = 1  <=>  ||p|| = 1 and <p, d> = 0
        return self.primary.is_unit(tol) and abs(self.primary.dot(self.dual)) <= tol

    def conjugate(self) -> DualQuaternion:
        return dq_conj(self)

    def __mul__(self, other: DualQuaternion) -> DualQuaternion:
        return dq_mul(self, other)

    def __neg__(self) -> DualQuaternion:
        return DualQuaternion(-self.primary, -self.dual)


DQ_IDENTITY = DualQuaternion.identity()


def _check_unit(a: DualQuaternion, name: str = "operand") -> None:
    if not a.is_unit(UNIT_TOL):
        raise InvalidOperandError(
            f"{name} is not a unit dual quaternion "
            f"(|p| = {a.primary.norm():.3g}, <p,d> = {a.primary.dot(a.dual):.3g})"
        )


def canonicalize(a: DualQuaternion) -> DualQuaternion:
    """Pick the sign representative with ``primary.w >= 0``.

    When the scalar part vanishes the first non-zero of ``(x, y, z)`` is made
    positive instead.
    """
    p = a.primary
    return -a if needs_sign_flip(p.w, p.x, p.y, p.z) else a


def needs_sign_flip(w: float, x: float, y: float, z: float) -> bool:
    """Whether the primary part ``(w, x, y, z)`` is the non-canonical representative."""
    if w > _SIGN_TOL:
        return False
    if w < -_SIGN_TOL:
        return True
    for c in (x, y, z):
        if c > _SIGN_TOL:
            return False
        if c < -_SIGN_TOL:
            return True
    return False


def _renormalize(a: DualQuaternion) -> DualQuaternion:
    p, d = a.primary, a.dual
    n = p.norm()
    drift = abs(n - 1.0)
    # Only repair small drift; deliberately non-unit operands pass through.
    if drift <= _DRIFT_TOL or drift > UNIT_TOL:
        return a
    p = p.scale(1.0 / n)
    d = d.scale(1.0 / n)
    d = d - p.scale(p.dot(d))
    return DualQuaternion(p, d)


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    """Dual-quaternion product ``a * b`` (apply ``b`` first, then ``a``)."""
    p = quat_mul(a.primary, b.primary)
    d = quat_mul(a.primary, b.dual) + quat_mul(a.dual, b.primary)
    return _renormalize(DualQuaternion(p, d))


def dq_conj(a: DualQuaternion) -> DualQuaternion:
    return DualQuaternion(a.primary.conjugate(), a.dual.conjugate())


def dq_diff(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    """Relative transform ``a* * b`` taking pose ``a`` to pose ``b``, canonicalized."""
    _check_unit(a, "left operand")
    _check_unit(b, "right operand")
    return canonicalize(dq_mul(dq_conj(a), b))


def dq_from_pose(rotation: Quaternion, translation: Sequence[float]) -> DualQuaternion:
    """Build the unit dual quaternion for rotation ``rotation`` and world translation."""
    if not rotation.is_unit(UNIT_TOL):
        raise InvalidOperandError(f"rotation is not a unit quaternion (|q| = {rotation.norm():.3g})")
    t = Quaternion.pure(translation)
    return canonicalize(DualQuaternion(rotation, quat_mul(t, rotation).scale(0.5)))


def dq_to_pose(a: DualQuaternion) -> tuple[Quaternion, tuple[float, float, float]]:
    """Inverse of :func:`dq_from_pose`: ``t = 2 d p*``."""
    _check_unit(a)
    c = canonicalize(a)
    t = quat_mul(c.dual, c.primary.conjugate()).scale(2.0)
    return c.primary, t.vector


def dq_distance(a: DualQuaternion, b: DualQuaternion) -> float:
    """2-norm over all eight components of ``dq_diff(a, b) - identity``."""
    diff = dq_diff(a, b)
    p, d = diff.primary, diff.dual
    return math.sqrt(
        (p.w - 1.0) ** 2 + p.x * p.x + p.y * p.y + p.z * p.z
        + d.w * d.w + d.x * d.x + d.y * d.y + d.z * d.z
    )


def dq_rotation_distance(a: DualQuaternion, b: DualQuaternion) -> float:
    """Primary-part term of :func:`dq_distance`; blind to translations."""
    p = dq_diff(a, b).primary
    return math.sqrt((p.w - 1.0) ** 2 + p.x * p.x + p.y * p.y + p.z * p.z)
