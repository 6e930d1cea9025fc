"""Quaternion, pose and rigid-transform algebra.

Quaternions are stored as (w, x, y, z) everywhere, including wire and file
formats. Values are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidAxis

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Quat:
    """Unit quaternion. Non-unit input is normalized on construction."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        w, x, y, z = float(self.w), float(self.x), float(self.y), float(self.z)
        n2 = w * w + x * x + y * y + z * z
        if not math.isfinite(n2) or n2 == 0.0:
            raise ValueError(f"cannot build a rotation from ({w}, {x}, {y}, {z})")
        if abs(n2 - 1.0) > _UNIT_TOL:
            n = math.sqrt(n2)
            w, x, y, z = w / n, x / n, y / n, z / n
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls) -> Quat:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, a) -> Quat:
        return cls(*(float(v) for v in a))

    @classmethod
    def from_matrix(cls, m) -> Quat:
        """Shepperd's method; robust for every rotation matrix."""
        m = np.asarray(m, dtype=float)
        tr = m[0, 0] + m[1, 1] + m[2, 2]
        if tr > 0.0:
            s = 2.0 * math.sqrt(tr + 1.0)
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        if w < 0.0:
            w, x, y, z = -w, -x, -y, -z
        return cls(w, x, y, z)

    @classmethod
    def from_rotvec(cls, rv) -> Quat:
        rv = np.asarray(rv, dtype=float)
        if rv.shape != (3,) or not np.all(np.isfinite(rv)):
            raise InvalidAxis(f"rotation vector must be a finite 3-vector, got {rv!r}")
        angle = float(np.linalg.norm(rv))
        # sin(angle/2)/angle without dividing by a tiny norm
        k = math.sin(0.5 * angle) / angle if angle > 1e-6 else 0.5 - angle * angle / 48.0
        return cls(math.cos(0.5 * angle), *(k * rv))

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def conj(self) -> Quat:
        return Quat(self.w, -self.x, -self.y, -self.z)

    inverse = conj

    def __mul__(self, other: Quat) -> Quat:
        a, b = self, other
        return Quat(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotate(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        u = np.array([self.x, self.y, self.z])
        t = 2.0 * np.cross(u, v)
        return v + self.w * t + np.cross(u, t)

    def to_rotvec(self) -> np.ndarray:
        """Rotation vector of the shortest equivalent rotation (angle in [0, pi])."""
        w, v = self.w, np.array([self.x, self.y, self.z])
        if w < 0.0:
            w, v = -w, -v
        s = float(np.linalg.norm(v))
        if s < 1e-300:
            return np.zeros(3)
        angle = 2.0 * math.atan2(s, w)
        return v * (angle / s)

    def power(self, t: float) -> Quat:
        """Scale the rotation angle by ``t`` (geodesic extrapolation from identity)."""
        return Quat.from_rotvec(self.to_rotvec() * t)

    def angle_to(self, other: Quat) -> float:
        """Geodesic distance; double-cover safe."""
        # 2*acos(|<q1,q2>|), evaluated via atan2 to keep precision near zero
        r = self.conj() * other
        return 2.0 * math.atan2(math.sqrt(r.x * r.x + r.y * r.y + r.z * r.z), abs(r.w))

    def same_rotation(self, other: Quat, tol: float = 1e-9) -> bool:
        return self.angle_to(other) <= tol


def quat_from_axis_angle(axis, angle: float) -> Quat:
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,) or not np.all(np.isfinite(axis)):
        raise InvalidAxis(f"axis must be a finite 3-vector, got {axis!r}")
    n = float(np.linalg.norm(axis))
    if abs(n - 1.0) > 1e-9:
        raise InvalidAxis(f"axis norm {n} is not 1")
    h = 0.5 * float(angle)
    s = math.sin(h)
    return Quat(math.cos(h), s * axis[0], s * axis[1], s * axis[2])


def _vec3(p) -> tuple[float, float, float]:
    a = tuple(float(v) for v in p)
    if len(a) != 3:
        raise ValueError(f"expected a 3-vector, got {p!r}")
    return a


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: Quat = Quat()

    def __post_init__(self):
        pos = _vec3(self.position)
        if not all(math.isfinite(v) for v in pos):
            raise ValueError(f"pose position must be finite, got {pos}")
        object.__setattr__(self, "position", pos)

    @property
    def p(self) -> np.ndarray:
        return np.array(self.position)

    @classmethod
    def from_matrix(cls, position, rotation) -> Pose:
        return cls(position, Quat.from_matrix(rotation))


@dataclass(frozen=True)
class RigidTransform:
    rotation: Quat = Quat()
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "translation", _vec3(self.translation))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    def apply(self, p) -> np.ndarray:
        return self.rotation.rotate(p) + np.array(self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """``self.compose(other).apply(p) == self.apply(other.apply(p))``."""
        return RigidTransform(self.rotation * other.rotation, self.apply(other.translation))

    def inverse(self) -> RigidTransform:
        rinv = self.rotation.conj()
        return RigidTransform(rinv, -rinv.rotate(self.translation))

    def apply_pose(self, pose: Pose) -> Pose:
        return Pose(self.apply(pose.position), self.rotation * pose.orientation)

    def is_close(self, other: RigidTransform, tol: float = 1e-9) -> bool:
        dt = np.linalg.norm(np.subtract(self.translation, other.translation))
        return dt <= tol and self.rotation.same_rotation(other.rotation, tol)


def transform_apply(t: RigidTransform, p) -> np.ndarray:
    return t.apply(p)


def transform_compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return a.compose(b)


def transform_invert(t: RigidTransform) -> RigidTransform:
    return t.inverse()


def rot_x(angle: float) -> Quat:
    return quat_from_axis_angle((1.0, 0.0, 0.0), angle)


def rot_y(angle: float) -> Quat:
    return quat_from_axis_angle((0.0, 1.0, 0.0), angle)


def rot_z(angle: float) -> Quat:
    return quat_from_axis_angle((0.0, 0.0, 1.0), angle)
