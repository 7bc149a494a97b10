"""Unit quaternion algebra and small 3-vector helpers.

Conventions used across the whole package:

* Quaternions are scalar-first ``(w, x, y, z)``, Hamilton product, and
  represent *active* rotations of vectors.
* Frames are right-handed, world frame Z-up.
* ``q`` and ``-q`` describe the same rotation (double cover); every
  rotation-level comparison in this package is sign-invariant.
"""

from __future__ import annotations

import math
from typing import NamedTuple

# Construction rejects quaternions whose norm deviates from 1 by more than
# this; anything closer is silently renormalized.
UNIT_TOLERANCE = 1e-6


class Vec3(NamedTuple):
    x: float
    y: float
    z: float


def vec_add(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(a.x + b.x, a.y + b.y, a.z + b.z)


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(a.x - b.x, a.y - b.y, a.z - b.z)


def vec_scale(a: Vec3, s: float) -> Vec3:
    return Vec3(a.x * s, a.y * s, a.z * s)


def dot(a: Vec3, b: Vec3) -> float:
    return a.x * b.x + a.y * b.y + a.z * b.z


def cross(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )


def norm(a: Vec3) -> float:
    return math.sqrt(a.x * a.x + a.y * a.y + a.z * a.z)


def normalized(a: Vec3) -> Vec3:
    n = norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return Vec3(a.x / n, a.y / n, a.z / n)


class UnitQuaternion(tuple):
    """Immutable unit quaternion ``(w, x, y, z)``.

    The constructor renormalizes inputs within ``UNIT_TOLERANCE`` of unit
    norm and rejects anything further away, so every value of this type is
    unit to within float epsilon.
    """

    __slots__ = ()

    def __new__(cls, w: float, x: float, y: float, z: float):
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > UNIT_TOLERANCE:
            raise ValueError(f"quaternion norm {n!r} deviates from 1 beyond {UNIT_TOLERANCE}")
        if n != 1.0:
            inv = 1.0 / n
            w, x, y, z = w * inv, x * inv, y * inv, z * inv
        return tuple.__new__(cls, (w, x, y, z))

    @property
    def w(self) -> float:
        return self[0]

    @property
    def x(self) -> float:
        return self[1]

    @property
    def y(self) -> float:
        return self[2]

    @property
    def z(self) -> float:
        return self[3]

    def __repr__(self) -> str:
        return f"UnitQuaternion(w={self[0]!r}, x={self[1]!r}, y={self[2]!r}, z={self[3]!r})"


IDENTITY = UnitQuaternion(1.0, 0.0, 0.0, 0.0)


def multiply(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion:
    """Hamilton product ``a * b``, renormalized."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return UnitQuaternion(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def inverse(q: UnitQuaternion) -> UnitQuaternion:
    """Inverse of a unit quaternion (its conjugate)."""
    w, x, y, z = q
    return UnitQuaternion(w, -x, -y, -z)


def rotate_vector(q: UnitQuaternion, v: Vec3) -> Vec3:
    """Rotate ``v`` by ``q`` (conjugation ``q v q^-1``, expanded)."""
    w, qx, qy, qz = q
    vx, vy, vz = v
    # t = 2 * (q_vec x v); v' = v + w*t + q_vec x t
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return Vec3(
        vx + w * tx + qy * tz - qz * ty,
        vy + w * ty + qz * tx - qx * tz,
        vz + w * tz + qx * ty - qy * tx,
    )


def from_axis_angle(axis: Vec3, angle: float) -> UnitQuaternion:
    """Quaternion rotating by ``angle`` radians about ``axis``."""
    n = norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must have nonzero norm")
    half = 0.5 * angle
    s = math.sin(half) / n
    return UnitQuaternion(math.cos(half), axis.x * s, axis.y * s, axis.z * s)


def to_axis_angle(q: UnitQuaternion) -> tuple[Vec3, float]:
    """Axis and angle of ``q``; angle in [0, pi], axis unit.

    The identity maps to ``((1, 0, 0), 0)`` by convention.
    """
    w, x, y, z = q
    if w < 0.0:  # pick the representative with angle <= pi
        w, x, y, z = -w, -x, -y, -z
    s = math.sqrt(x * x + y * y + z * z)
    if s < 1e-12:
        return Vec3(1.0, 0.0, 0.0), 0.0
    angle = 2.0 * math.atan2(s, w)
    return Vec3(x / s, y / s, z / s), angle


def geodesic_distance(a: UnitQuaternion, b: UnitQuaternion) -> float:
    """Angle in radians of the relative rotation between ``a`` and ``b``.

    ``2*acos(|<a, b>|)``: sign-invariant, range [0, pi], zero iff the two
    quaternions encode the same rotation.
    """
    d = abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
    if d > 1.0:  # float overshoot near aligned quaternions
        d = 1.0
    return 2.0 * math.acos(d)


def slerp(a: UnitQuaternion, b: UnitQuaternion, t: float) -> UnitQuaternion:
    """Shortest-path spherical interpolation from ``a`` (t=0) to ``b`` (t=1)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    d = aw * bw + ax * bx + ay * by + az * bz
    if d < 0.0:  # take the short way around the double cover
        bw, bx, by, bz = -bw, -bx, -by, -bz
        d = -d
    if d > 1.0 - 1e-9:
        # nearly aligned: nlerp avoids a 0/0 in the sine ratio
        w = aw + t * (bw - aw)
        x = ax + t * (bx - ax)
        y = ay + t * (by - ay)
        z = az + t * (bz - az)
        return UnitQuaternion(w, x, y, z)
    theta = math.acos(d)
    sin_theta = math.sin(theta)
    ka = math.sin((1.0 - t) * theta) / sin_theta
    kb = math.sin(t * theta) / sin_theta
    return UnitQuaternion(
        ka * aw + kb * bw,
        ka * ax + kb * bx,
        ka * ay + kb * by,
        ka * az + kb * bz,
    )


def yaw(angle: float) -> UnitQuaternion:
    """Rotation about world +Z (convenience)."""
    half = 0.5 * angle
    return UnitQuaternion(math.cos(half), 0.0, 0.0, math.sin(half))


def to_rotation_matrix(q: UnitQuaternion):
    """3x3 row-major rotation matrix of ``q`` as nested lists.

    Internal helper for the image kernels; rotation matrices are not a
    public interchange type.
    """
    w, x, y, z = q
    return [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]
