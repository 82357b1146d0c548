"""Fuse IMU orientation with optical in-plane motion into a 3D trajectory.

The IMU fixes the orientation of the surface the finger slides on; the
optical sensor reports displacement within that surface. Each frame's
counts are converted to millimetres, placed in the plane's local x/y axes
and rotated into the world frame.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import ahrs, geom
from .errors import InvalidInputError
from .optical import (AccelerationModel, OpticalSample, SensorConfig, clamp_speed,
                      correct_counts, counts_to_mm)

SPEED_SMOOTHING = 3


class FormFactor(enum.Enum):
    FINGERNAIL = "fingernail"   # IMU on the nail, perpendicular to the surface
    PAD = "pad"                 # IMU over the finger pad, parallel to the surface
    RING = "ring"

    @classmethod
    def parse(cls, value) -> "FormFactor":
        if isinstance(value, cls):
            return value
        aliases = {"1": cls.FINGERNAIL, "2": cls.PAD, "3": cls.RING}
        try:
            return aliases.get(str(value)) or cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"unknown form factor {value!r}") from None


# fixed mounting rotation from finger frame to plane frame: +90 deg pitch
_NAIL_MOUNT = geom.rot_y(math.pi / 2)


@dataclass(frozen=True)
class PosePoint:
    t: float
    position: np.ndarray      # mm, relative to the stream origin
    orientation: np.ndarray   # unit quaternion, body -> world


def plane_orientation(finger, ff: FormFactor) -> np.ndarray:
    """Orientation of the touch plane given the IMU (finger) orientation.

    For the fingernail mount the IMU sits at right angles to the surface, so
    the plane is the finger frame pitched by +90 degrees. The offset is
    applied as a body-frame rotation rather than by editing Euler angles:
    the two agree whenever roll is zero, and the composition has no gimbal
    singularity at the -90 degree finger pitch this mount usually sits at.
    """
    q = geom.quat(finger)
    if abs(float(np.linalg.norm(q)) - 1.0) > geom.QUAT_NORM_TOL:
        raise InvalidInputError("finger orientation must be a unit quaternion")
    if ff is FormFactor.FINGERNAIL:
        out = geom.quat_multiply(q, _NAIL_MOUNT)
        return out / np.linalg.norm(out)
    return q


@dataclass(frozen=True)
class AxisMap:
    """2x2 sign/swap matrix from sensor counts (dx, dy) to plane (x, y)."""

    matrix: Tuple[Tuple[int, int], Tuple[int, int]] = ((1, 0), (0, 1))

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if (m.shape != (2, 2) or not np.all(np.isin(m, (-1, 0, 1)))
                or np.any(np.count_nonzero(m, axis=0) != 1)
                or np.any(np.count_nonzero(m, axis=1) != 1)):
            raise InvalidInputError("axis map must be a signed permutation matrix")

    def apply(self, dx: float, dy: float) -> Tuple[float, float]:
        (a, b), (c, d) = self.matrix
        return a * dx + b * dy, c * dx + d * dy


@dataclass
class FusionState:
    """Mutable per-stream accumulator; one owner, sequential updates."""

    config: SensorConfig = field(default_factory=SensorConfig)
    form_factor: FormFactor = FormFactor.PAD
    correction: Optional[AccelerationModel] = None
    axis_map: AxisMap = field(default_factory=AxisMap)
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: geom.IDENTITY_QUAT.copy())
    last_t: Optional[float] = None
    _speeds: deque = field(default_factory=lambda: deque(maxlen=SPEED_SMOOTHING))

    def __post_init__(self):
        if self.correction is not None and self.correction.resolution != self.config.resolution:
            raise InvalidInputError(
                f"correction model is for {self.correction.resolution} cpi, "
                f"sensor runs at {self.config.resolution} cpi")


def _estimate_speed(state: FusionState, t: float, dx: float, dy: float) -> float:
    dt = state.config.report_interval if state.last_t is None else t - state.last_t
    if dt <= 0:
        dt = state.config.report_interval
    state._speeds.append(math.hypot(dx, dy) / state.config.resolution / dt)
    return sum(state._speeds) / len(state._speeds)


def fusion_step(state: FusionState, t: float, dx: float, dy: float, orientation,
                speed: Optional[float] = None) -> PosePoint:
    """Advance ``state`` by one optical frame and return the new pose.

    With a correction model, counts are divided back by the speed-dependent
    gain. ``speed`` (inch/s) overrides the built-in estimate, which is the
    3-frame moving average of the reported motion.
    """
    q = geom.quat(orientation)
    if abs(float(np.linalg.norm(q)) - 1.0) > geom.QUAT_NORM_TOL:
        raise InvalidInputError("orientation must be a unit quaternion")
    if state.correction is not None:
        s = _estimate_speed(state, t, dx, dy) if speed is None else speed
        s = clamp_speed(s, state.correction)
        dx = correct_counts(dx, s, state.correction)
        dy = correct_counts(dy, s, state.correction)
    px, py = state.axis_map.apply(dx, dy)
    if px or py:
        local = np.array([counts_to_mm(px, state.config), counts_to_mm(py, state.config), 0.0])
        R = geom.quat_to_dcm(plane_orientation(q, state.form_factor))
        state.position = state.position + R @ local
    state.orientation = q
    state.last_t = t
    return PosePoint(t, state.position.copy(), q.copy())


def run_pipeline(imu: Sequence[ahrs.ImuSample], optical: Sequence[OpticalSample],
                 cfg: SensorConfig = SensorConfig(), ff: FormFactor = FormFactor.PAD,
                 correction: Optional[AccelerationModel] = None,
                 gains: Optional[ahrs.AhrsGains] = None,
                 initial_attitude=None, seed_from_first: bool = True,
                 axis_map: Optional[AxisMap] = None) -> List[PosePoint]:
    """Fused trajectory, one pose per optical sample.

    Each optical frame takes the latest filter orientation at or before its
    timestamp (zero-order hold). Frames earlier than every IMU sample use
    the initial attitude. When ``seed_from_first`` is set and no explicit
    initial attitude is given, the filter starts from the attitude implied
    by the first IMU sample's accelerometer and magnetometer. The first
    frame defines the origin; its own delta is not applied.
    """
    if not optical:
        return []
    if initial_attitude is None and seed_from_first and imu:
        try:
            initial_attitude = ahrs.attitude_from_reference(imu[0].accel, imu[0].mag)
        except InvalidInputError:
            initial_attitude = None
    state = ahrs.ahrs_init(gains, initial_attitude)
    initial_q = state.orientation
    _, Rs = ahrs.ahrs_run(state, imu)
    imu_t = np.array([s.t for s in imu], dtype=float)
    quats = [geom.dcm_to_quat(R) for R in Rs]

    fs = FusionState(config=cfg, form_factor=ff, correction=correction,
                     axis_map=axis_map or AxisMap())
    out = []
    for k, s in enumerate(optical):
        i = int(np.searchsorted(imu_t, s.t, side="right")) - 1
        q = quats[i] if i >= 0 else initial_q
        if k == 0:
            fs.orientation = q
            fs.last_t = s.t
            out.append(PosePoint(s.t, fs.position.copy(), q.copy()))
            continue
        out.append(fusion_step(fs, s.t, s.dx, s.dy, q))
    return out
