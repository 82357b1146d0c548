"""Rotation and vector helpers.

Conventions used everywhere in the package:

* Vectors are ``numpy`` arrays of shape ``(3,)``.
* Quaternions are arrays ``[w, x, y, z]`` (Hamilton product). A rotation
  quaternion ``q`` maps body-frame vectors into the world frame.
* A direction cosine matrix (DCM) is the 3x3 matrix of that same
  body-to-world rotation, so ``rotate(q, v) == quat_to_dcm(q) @ v``.
* Euler angles are intrinsic Z-Y-X: yaw about z, then pitch about the new
  y, then roll about the new x. ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
* World frame is z-up; the finger-forward body axis is +y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError

QUAT_NORM_TOL = 1e-6
# |sin(pitch)| above this is treated as gimbal lock on extraction
_GIMBAL_EPS = 1e-10

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
FORWARD_AXIS = np.array([0.0, 1.0, 0.0])


class EulerAngles(NamedTuple):
    roll: float
    pitch: float
    yaw: float


def vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise InvalidInputError(f"expected 3 components, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("vector components must be finite")
    return a


def quat(q) -> np.ndarray:
    a = np.asarray(q, dtype=float).reshape(-1)
    if a.shape != (4,):
        raise InvalidInputError(f"expected 4 quaternion components, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("quaternion components must be finite")
    return a


def quat_normalize(q) -> np.ndarray:
    q = quat(q)
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise InvalidInputError("cannot normalize a zero quaternion")
    return q / n


def _require_unit(q: np.ndarray) -> None:
    if abs(float(np.linalg.norm(q)) - 1.0) > QUAT_NORM_TOL:
        raise InvalidInputError(
            f"quaternion norm {np.linalg.norm(q):.9f} is not 1 within {QUAT_NORM_TOL}"
        )


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product ``a * b`` (apply ``b`` first, then ``a``)."""
    w1, x1, y1, z1 = quat(a)
    w2, x2, y2, z2 = quat(b)
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conjugate(q) -> np.ndarray:
    q = quat(q)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = vec3(axis)
    n = float(np.linalg.norm(axis))
    if n == 0.0:
        raise InvalidInputError("rotation axis must be nonzero")
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis / n))


def quat_to_dcm(q) -> np.ndarray:
    q = quat(q)
    _require_unit(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def dcm_to_quat(m) -> np.ndarray:
    """Shepperd's method; the result is normalized with ``w >= 0``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise InvalidInputError("DCM must be 3x3")
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    q /= np.linalg.norm(q)
    return -q if q[0] < 0 else q


def euler_to_dcm(e) -> np.ndarray:
    roll, pitch, yaw = e
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def dcm_to_euler(m) -> EulerAngles:
    """Extract Z-Y-X angles; pitch lands in [-pi/2, pi/2].

    At gimbal lock (``|pitch| = pi/2``) roll and yaw are not separable; roll
    is set to 0 and the combined rotation is reported as yaw.
    """
    m = np.asarray(m, dtype=float)
    s = -m[2, 0]
    if abs(s) >= 1.0 - _GIMBAL_EPS:
        pitch = math.copysign(math.pi / 2, s)
        return EulerAngles(0.0, pitch, math.atan2(-m[0, 1], m[1, 1]))
    pitch = math.asin(s)
    roll = math.atan2(m[2, 1], m[2, 2])
    yaw = math.atan2(m[1, 0], m[0, 0])
    return EulerAngles(roll, pitch, yaw)


def euler_to_quat(e) -> np.ndarray:
    roll, pitch, yaw = e
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    q = np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])
    return -q if q[0] < 0 else q


def quat_to_euler(q) -> EulerAngles:
    return dcm_to_euler(quat_to_dcm(q))


def rotate(q, v) -> np.ndarray:
    """Rotate ``v`` from body into world frame."""
    return quat_to_dcm(q) @ vec3(v)


def angle_between(u, v) -> float:
    """Angle in radians between two nonzero vectors, in ``[0, pi]``."""
    u = vec3(u)
    v = vec3(v)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise InvalidInputError("angle_between needs nonzero vectors")
    c = float(np.dot(u, v)) / (nu * nv)
    return math.acos(min(1.0, max(-1.0, c)))


def rot_x(angle: float) -> np.ndarray:
    return quat_from_axis_angle([1.0, 0.0, 0.0], angle)


def rot_y(angle: float) -> np.ndarray:
    return quat_from_axis_angle([0.0, 1.0, 0.0], angle)


def rot_z(angle: float) -> np.ndarray:
    return quat_from_axis_angle([0.0, 0.0, 1.0], angle)


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", vec3(self.origin))
        d = vec3(self.direction)
        if abs(float(np.linalg.norm(d)) - 1.0) > 1e-9:
            raise InvalidInputError("ray direction must be a unit vector")
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction
