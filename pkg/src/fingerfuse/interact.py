"""Interaction techniques: ray-cast selection, translation, stroke rotation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import geom
from .errors import InvalidInputError

DEFAULT_GAIN = 0.05  # rad per mm of stroke
TIE_TOL = 1e-9


@dataclass(frozen=True)
class SceneObject:
    id: str
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", geom.vec3(self.center))
        if not self.radius > 0:
            raise InvalidInputError(f"object {self.id!r}: radius must be positive")


@dataclass(frozen=True)
class RotationGain:
    k: float = DEFAULT_GAIN

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidInputError("rotation gain must be positive")


@dataclass(frozen=True)
class RotationCommand:
    """Rotate ``target`` by ``angle`` about ``axis``. ``axis is None`` means no-op."""

    axis: Optional[np.ndarray]
    angle: float
    target: Optional[str] = None

    @property
    def is_noop(self) -> bool:
        return self.axis is None or self.angle == 0.0

    def as_quaternion(self) -> np.ndarray:
        if self.is_noop:
            return geom.IDENTITY_QUAT.copy()
        return geom.quat_from_axis_angle(self.axis, self.angle)

    def apply(self, v) -> np.ndarray:
        return geom.rotate(self.as_quaternion(), v)


def pointing_ray(orientation, origin=(0.0, 0.0, 0.0)) -> geom.Ray:
    """Ray along the finger-forward (+y) body axis."""
    d = geom.rotate(orientation, geom.FORWARD_AXIS)
    return geom.Ray(origin, d / np.linalg.norm(d))


def ray_sphere(ray: geom.Ray, obj: SceneObject) -> Optional[float]:
    """Smallest nonnegative ray parameter hitting ``obj``, or ``None``."""
    oc = ray.origin - obj.center
    b = float(np.dot(ray.direction, oc))
    c = float(np.dot(oc, oc)) - obj.radius * obj.radius
    disc = b * b - c
    if disc < 0:
        return None
    root = math.sqrt(disc)
    t_near = -b - root
    if t_near >= 0:
        return t_near
    t_far = -b + root
    return t_far if t_far >= 0 else None


def select(ray: geom.Ray, objects: Sequence[SceneObject]) -> Optional[str]:
    """Id of the nearest object hit by ``ray``; ties go to the smaller id."""
    hits = [(t, o.id) for o in objects if (t := ray_sphere(ray, o)) is not None]
    if not hits:
        return None
    best = min(t for t, _ in hits)
    return min(i for t, i in hits if t - best <= TIE_TOL)


def rotation_from_stroke(stroke, plane, gain: RotationGain = RotationGain(),
                         target: Optional[str] = None, sign: int = 1) -> RotationCommand:
    """Rotation about the in-plane perpendicular of a drawn stroke.

    The axis is the stroke turned by +90 degrees within the plane (``sign=-1``
    turns it the other way), mapped to world by the plane orientation. The
    angle is ``gain.k * |stroke|``. A zero-length stroke gives a no-op.
    """
    sx, sy = (float(v) for v in stroke)
    length = math.hypot(sx, sy)
    if length == 0.0:
        return RotationCommand(None, 0.0, target)
    if sign not in (1, -1):
        raise InvalidInputError("sign must be +1 or -1")
    local = np.array([-sy, sx, 0.0]) * (sign / length)
    axis = geom.rotate(plane, local)
    return RotationCommand(axis / np.linalg.norm(axis), gain.k * length, target)


def translate_object(position, delta) -> np.ndarray:
    return geom.vec3(position) + geom.vec3(delta)


def load_scene(path) -> List[SceneObject]:
    with open(path) as fh:
        return parse_scene(fh.read())


def parse_scene(text: str) -> List[SceneObject]:
    """Scene JSON: an array of ``{"id", "center": [x, y, z], "radius"}`` (mm)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"scene is not valid JSON: {exc}") from None
    if not isinstance(data, list):
        raise InvalidInputError("scene must be a JSON array")
    objs = []
    for i, item in enumerate(data):
        try:
            objs.append(SceneObject(str(item["id"]), item["center"], float(item["radius"])))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"scene object {i}: {exc}") from None
    ids = [o.id for o in objs]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("scene object ids must be unique")
    return objs
