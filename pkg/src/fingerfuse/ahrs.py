"""Attitude estimation from a 9-DOF IMU stream.

Direction-cosine-matrix filter with proportional-integral drift correction:
gyro rates are integrated exactly over each step, the accelerometer pulls
roll/pitch toward gravity and the tilt-compensated magnetometer pulls yaw
toward magnetic north (world +x). The DCM is re-orthonormalized every step.

Correction terms are expressed in m/s^2 of reference misalignment (heading
error is scaled by standard gravity to match), so with the default gains the
effective loop bandwidth is ``kp * g ~= 2 rad/s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import geom, kernels
from .errors import InvalidInputError

STANDARD_GRAVITY = 9.80665
MAX_STEP = 0.1


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro: np.ndarray
    accel: np.ndarray
    mag: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise InvalidInputError("sample time must be finite")
        object.__setattr__(self, "gyro", geom.vec3(self.gyro))
        object.__setattr__(self, "accel", geom.vec3(self.accel))
        object.__setattr__(self, "mag", geom.vec3(self.mag))
        # a zero vector is accepted; the filter skips gravity correction for it
        if np.linalg.norm(self.accel) > 20 * STANDARD_GRAVITY:
            raise InvalidInputError("accelerometer magnitude exceeds 20 g")


@dataclass(frozen=True)
class AhrsGains:
    kp: float = 0.2
    ki: float = 0.005

    def __post_init__(self):
        if not (self.kp >= 0 and self.ki >= 0):
            raise InvalidInputError(f"gains must be nonnegative, got kp={self.kp}, ki={self.ki}")


@dataclass(frozen=True)
class AhrsState:
    attitude: np.ndarray
    integral_error: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gains: AhrsGains = field(default_factory=AhrsGains)
    last_t: Optional[float] = None
    gravity: float = STANDARD_GRAVITY

    @property
    def orientation(self) -> np.ndarray:
        return geom.dcm_to_quat(self.attitude)


def attitude_from_reference(accel, mag) -> np.ndarray:
    """Attitude quaternion from one static accel/mag reading (TRIAD).

    Used to seed the filter from the first sample of a stream, as the
    firmware the filter is modelled on does at start-up.
    """
    a = geom.vec3(accel)
    m = geom.vec3(mag)
    an = np.linalg.norm(a)
    if an == 0.0:
        raise InvalidInputError("cannot derive attitude from a zero accelerometer vector")
    up = a / an
    north = m - np.dot(m, up) * up
    nn = np.linalg.norm(north)
    if nn < kernels.MIN_HORIZONTAL_FIELD:
        raise InvalidInputError("magnetic field has no usable horizontal component")
    north /= nn
    west = np.cross(up, north)
    return geom.dcm_to_quat(np.vstack([north, west, up]))


def ahrs_init(gains: Optional[AhrsGains] = None, initial_attitude=None,
              t0: Optional[float] = None) -> AhrsState:
    if gains is None:
        gains = AhrsGains()
    elif not isinstance(gains, AhrsGains):
        kp, ki = gains
        gains = AhrsGains(kp, ki)
    if initial_attitude is None:
        R = np.eye(3)
    else:
        R = geom.quat_to_dcm(initial_attitude)
    return AhrsState(attitude=R, gains=gains, last_t=t0)


def _step_length(last_t, t) -> float:
    if last_t is None:
        # first sample only anchors the clock
        return 0.0
    dt = t - last_t
    if dt <= 0:
        raise InvalidInputError(f"timestamps must increase (got {t} after {last_t})")
    if dt > MAX_STEP:
        raise InvalidInputError(f"step {dt:.3f} s exceeds the {MAX_STEP} s limit")
    return dt


def ahrs_update(state: AhrsState, sample: ImuSample):
    """Advance the filter by one sample; returns ``(new_state, quaternion)``."""
    dt = _step_length(state.last_t, sample.t)
    R, integral = kernels.dcm_step(
        state.attitude, state.integral_error, sample.gyro, sample.accel, sample.mag,
        dt, state.gains.kp, state.gains.ki, state.gravity,
    )
    new = AhrsState(R, integral, state.gains, sample.t, state.gravity)
    return new, geom.dcm_to_quat(R)


def ahrs_run(state: AhrsState, samples: Sequence[ImuSample]):
    """Filter a whole stream in one kernel call.

    Returns ``(final_state, attitudes)`` where ``attitudes`` has shape
    ``(n, 3, 3)``. Equivalent to folding :func:`ahrs_update` over ``samples``.
    """
    n = len(samples)
    if n == 0:
        return state, np.empty((0, 3, 3))
    t = np.array([s.t for s in samples], dtype=float)
    dts = np.empty(n)
    dts[0] = _step_length(state.last_t, t[0])
    if n > 1:
        diffs = np.diff(t)
        if np.any(diffs <= 0):
            k = int(np.argmax(diffs <= 0)) + 1
            raise InvalidInputError(f"timestamps must increase (sample {k})")
        if np.any(diffs > MAX_STEP):
            k = int(np.argmax(diffs > MAX_STEP)) + 1
            raise InvalidInputError(f"step before sample {k} exceeds {MAX_STEP} s")
        dts[1:] = diffs
    gyro = np.array([s.gyro for s in samples])
    accel = np.array([s.accel for s in samples])
    mag = np.array([s.mag for s in samples])
    Rs, integral = kernels.dcm_run(
        state.attitude, state.integral_error, dts, gyro, accel, mag,
        state.gains.kp, state.gains.ki, state.gravity,
    )
    return AhrsState(Rs[-1].copy(), integral, state.gains, float(t[-1]), state.gravity), Rs


def orientations(attitudes: Iterable[np.ndarray]) -> np.ndarray:
    return np.array([geom.dcm_to_quat(R) for R in attitudes])
