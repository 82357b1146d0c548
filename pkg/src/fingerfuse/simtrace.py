"""Synthetic traces with exact ground truth.

A trace is a finger drawing one shape on a flat surface tilted about the
world x axis, sampled at the report rate. The optical stream carries the
in-plane motion quantized to integer counts with error diffusion, so the
cumulative quantization error never exceeds half a count per axis. The IMU
is static and consistent with the finger orientation implied by the plane
tilt and the form factor.
"""
from __future__ import annotations

import gzip
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from . import geom, kernels
from .ahrs import STANDARD_GRAVITY, ImuSample
from .errors import InvalidInputError, TraceFormatError
from .fusion import FormFactor, PosePoint, plane_orientation
from .gestures import GestureConfig
from .optical import (MAX_CALIBRATED_SPEED, MM_PER_INCH, SQUAL_MAX, AccelerationModel,
                      OpticalSample, SensorConfig, distort_counts)

SHAPES = ("h-line", "v-line", "diagonal", "triangle", "square", "circle")
SIZES = (12, 21, 42, 84)
TEXTURE_NAMES = ("mousepad", "jeans", "wood")
FORMAT_NAME = "fingerfuse-trace"
FORMAT_VERSION = 1

MAG_DIP = math.radians(60.0)
LEAD_FRAMES = 5
TAP_FRAMES = 5
TAP_GAP_FRAMES = 20
RAMP_FRACTION = 0.2

IMU_NOISE = {"gyro": 0.002, "accel": 0.02, "mag": 0.003}


@dataclass(frozen=True)
class TextureProfile:
    name: str
    contact_squal_range: Tuple[int, int] = (30, 50)
    noise_sd: float = 0.5      # counts per frame

    def __post_init__(self):
        lo, hi = self.contact_squal_range
        if not 0 <= lo <= hi <= SQUAL_MAX:
            raise InvalidInputError("contact squal range must satisfy 0 <= lo <= hi <= 169")
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be nonnegative")


TEXTURES: Dict[str, TextureProfile] = {
    "mousepad": TextureProfile("mousepad", (30, 50), 0.5),
    "jeans": TextureProfile("jeans", (30, 50), 0.7),
    "wood": TextureProfile("wood", (30, 50), 0.6),
}


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    size: float                         # mm, side of the bounding square
    tilt_deg: Optional[float] = None    # None: drawn from the trace seed
    speed_profile: str = "constant"     # or "trapezoid"
    peak_speed: float = 1.0             # inch/s
    custom_size: bool = False

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise InvalidInputError(f"unknown shape {self.kind!r}")
        if not self.custom_size and self.size not in SIZES:
            raise InvalidInputError(f"size must be one of {SIZES} mm unless custom_size is set")
        if not self.size > 0:
            raise InvalidInputError("size must be positive")
        if self.tilt_deg is not None and not 0.0 <= self.tilt_deg <= 90.0:
            raise InvalidInputError("tilt must be within [0, 90] degrees")
        if self.speed_profile not in ("constant", "trapezoid"):
            raise InvalidInputError("speed profile must be 'constant' or 'trapezoid'")
        if not 0 < self.peak_speed <= MAX_CALIBRATED_SPEED:
            raise InvalidInputError(f"peak speed must be in (0, {MAX_CALIBRATED_SPEED}] inch/s")


@dataclass
class Trace:
    metadata: dict
    imu: List[ImuSample]
    optical: List[OpticalSample]
    truth: List[PosePoint]

    def __len__(self):
        return len(self.optical)


# ------------------------------------------------------------------- geometry

def _vertices(kind: str, s: float) -> np.ndarray:
    return {
        "h-line": [(0, 0), (s, 0)],
        "v-line": [(0, 0), (0, s)],
        "diagonal": [(0, 0), (s, s)],
        "triangle": [(0, 0), (s, 0), (s / 2, s), (0, 0)],
        "square": [(0, 0), (s, 0), (s, s), (0, s), (0, 0)],
    }[kind]


def path_length(kind: str, size: float) -> float:
    if kind == "circle":
        return math.pi * size
    v = np.asarray(_vertices(kind, size), dtype=float)
    return float(np.linalg.norm(np.diff(v, axis=0), axis=1).sum())


def path_points(kind: str, size: float, s: np.ndarray) -> np.ndarray:
    """In-plane points (mm) at arc lengths ``s`` along the shape."""
    s = np.asarray(s, dtype=float)
    if kind == "circle":
        r = size / 2
        th = s / r
        return np.stack([r * np.sin(th), r * (1 - np.cos(th))], axis=1)
    v = np.asarray(_vertices(kind, size), dtype=float)
    seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = np.clip((s - cum[i]) / seg[i], 0.0, 1.0)
    return v[i] + (v[i + 1] - v[i]) * frac[:, None]


def arc_length_schedule(length: float, profile: str, peak_speed: float,
                        dt: float) -> np.ndarray:
    """Arc length at each frame (first 0, last exactly ``length``)."""
    v = peak_speed * MM_PER_INCH
    if profile == "constant":
        T = length / v
        t = np.arange(math.ceil(T / dt - 1e-9) + 1) * dt
        return np.minimum(v * t, length)
    d_ramp = RAMP_FRACTION * length
    a = v * v / (2 * d_ramp)
    t_ramp = v / a
    T = 2 * t_ramp + (length - 2 * d_ramp) / v
    t = np.minimum(np.arange(math.ceil(T / dt - 1e-9) + 1) * dt, T)
    s = np.where(
        t < t_ramp, 0.5 * a * t * t,
        np.where(t <= T - t_ramp, d_ramp + v * (t - t_ramp),
                 length - 0.5 * a * (T - t) ** 2))
    s[-1] = length
    return s


def finger_orientation(tilt_deg: float, ff: FormFactor) -> np.ndarray:
    """Finger (IMU) orientation whose touch plane is tilted ``tilt_deg`` about x."""
    plane = geom.rot_x(math.radians(tilt_deg))
    if ff is FormFactor.FINGERNAIL:
        q = geom.quat_multiply(plane, geom.rot_y(-math.pi / 2))
        return q / np.linalg.norm(q)
    return plane


def gesture_config_for(texture: TextureProfile) -> GestureConfig:
    """Recognizer settings under which every in-contact frame counts as contact."""
    return GestureConfig(texture_name=texture.name,
                         contact_squal_threshold=max(1, min(40, texture.contact_squal_range[0])))


# ----------------------------------------------------------------- generation

def generate_trace(spec: ShapeSpec, texture: TextureProfile, cfg: SensorConfig = SensorConfig(),
                   seed: int = 0, distortion: Optional[AccelerationModel] = None,
                   noise: bool = False, form_factor: FormFactor = FormFactor.FINGERNAIL,
                   leading_tap: bool = False, trace_id: Optional[str] = None) -> Trace:
    if distortion is not None and distortion.resolution != cfg.resolution:
        raise InvalidInputError("distortion model resolution does not match the sensor")
    rng = np.random.default_rng(seed)
    tilt = spec.tilt_deg if spec.tilt_deg is not None else float(rng.uniform(0.0, 90.0))
    dt = cfg.report_interval

    length = path_length(spec.kind, spec.size)
    s_draw = arc_length_schedule(length, spec.speed_profile, spec.peak_speed, dt)
    pre = [0.0] * LEAD_FRAMES
    contact = [False] * LEAD_FRAMES
    if leading_tap:
        pre += [0.0] * (TAP_FRAMES + TAP_GAP_FRAMES)
        contact += [True] * TAP_FRAMES + [False] * TAP_GAP_FRAMES
    s = np.concatenate([pre, s_draw, [length] * LEAD_FRAMES])
    contact = np.array(contact + [True] * len(s_draw) + [False] * LEAD_FRAMES)
    n = len(s)
    t = np.arange(n) * dt

    plane_xy = path_points(spec.kind, spec.size, s)
    finger = finger_orientation(tilt, form_factor)
    plane_R = geom.quat_to_dcm(plane_orientation(finger, form_factor))
    gt_pos = np.column_stack([plane_xy, np.zeros(n)]) @ plane_R.T

    # optical: in-plane deltas -> counts, optional distortion and noise, quantize
    d_mm = np.vstack([[0.0, 0.0], np.diff(plane_xy, axis=0)])
    counts = d_mm / MM_PER_INCH * cfg.resolution
    if distortion is not None:
        speed = np.linalg.norm(d_mm, axis=1) / MM_PER_INCH / dt
        gain = np.array([distort_counts(1.0, min(sp, MAX_CALIBRATED_SPEED), distortion)
                         for sp in speed])
        counts = counts * gain[:, None]
    if noise and texture.noise_sd > 0:
        counts = counts + contact[:, None] * rng.normal(0.0, texture.noise_sd, size=(n, 2))
    dx = kernels.diffuse_quantize(counts[:, 0])
    dy = kernels.diffuse_quantize(counts[:, 1])
    lo, hi = texture.contact_squal_range
    squal = np.where(contact, rng.integers(lo, hi + 1, size=n), 0)

    # static IMU consistent with the finger orientation
    Rf = geom.quat_to_dcm(finger)
    accel = Rf.T @ np.array([0.0, 0.0, STANDARD_GRAVITY])
    mag = Rf.T @ np.array([math.cos(MAG_DIP), 0.0, -math.sin(MAG_DIP)])
    gyro = np.zeros((n, 3))
    accel_n = np.tile(accel, (n, 1))
    mag_n = np.tile(mag, (n, 1))
    if noise:
        gyro = gyro + rng.normal(0.0, IMU_NOISE["gyro"], size=(n, 3))
        accel_n = accel_n + rng.normal(0.0, IMU_NOISE["accel"], size=(n, 3))
        mag_n = mag_n + rng.normal(0.0, IMU_NOISE["mag"], size=(n, 3))

    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "trace_id": trace_id or f"{texture.name}_{spec.size:g}mm_{spec.kind}_s{seed}",
        "shape": {**asdict(spec), "tilt_deg": tilt, "path_length_mm": length},
        "texture": asdict(texture),
        "seed": int(seed),
        "sensor": asdict(cfg),
        "form_factor": form_factor.value,
        "distortion": None if distortion is None else {
            "resolution": distortion.resolution, "coefficients": list(distortion.coefficients)},
        "noise": bool(noise),
        "leading_tap": bool(leading_tap),
        "n_samples": n,
    }
    meta = json.loads(json.dumps(meta))   # same shape as after a file round trip
    tl = t.tolist()
    imu = [ImuSample(tl[k], gyro[k], accel_n[k], mag_n[k]) for k in range(n)]
    optical = [OpticalSample(tl[k], int(dx[k]), int(dy[k]), int(squal[k])) for k in range(n)]
    truth = [PosePoint(tl[k], gt_pos[k], finger) for k in range(n)]
    return Trace(meta, imu, optical, truth)


def trace_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


def design_matrix(seed: int, reps: int = 5) -> Iterator[Tuple[str, ShapeSpec, TextureProfile, int]]:
    """Texture x size x shape x repetition cells, each with its own seed."""
    cells = itertools.product(TEXTURE_NAMES, SIZES, SHAPES, range(1, reps + 1))
    for idx, (tex, size, shape, rep) in enumerate(cells):
        name = f"{tex}_{size:02d}mm_{shape}_r{rep}"
        yield name, ShapeSpec(shape, size), TEXTURES[tex], trace_seed(seed, idx)


def trace_keys(trace: Trace) -> dict:
    m = trace.metadata
    return {"texture": m["texture"]["name"], "size": m["shape"]["size"], "shape": m["shape"]["kind"]}


# ------------------------------------------------------------------------- I/O

_SAMPLE_KEYS = {"t", "gyro", "accel", "mag", "dx", "dy", "squal", "gt_pos", "gt_quat"}


def _open(path, mode: str):
    path = Path(path)
    if path.suffix != ".gz":
        return open(path, mode, encoding="ascii", newline="\n")
    if mode == "w":
        # mtime pinned so identical traces compress to identical bytes
        return io.TextIOWrapper(gzip.GzipFile(path, "wb", mtime=0), encoding="ascii", newline="\n")
    return gzip.open(path, "rt", encoding="ascii")


def dumps_lines(trace: Trace) -> Iterator[str]:
    yield json.dumps(trace.metadata, sort_keys=True)
    for imu, opt, gt in zip(trace.imu, trace.optical, trace.truth):
        yield json.dumps({
            "t": imu.t,
            "gyro": imu.gyro.tolist(), "accel": imu.accel.tolist(), "mag": imu.mag.tolist(),
            "dx": opt.dx, "dy": opt.dy, "squal": opt.squal,
            "gt_pos": gt.position.tolist(), "gt_quat": gt.orientation.tolist(),
        })


def write_trace(trace: Trace, path) -> None:
    with _open(path, "w") as fh:
        for line in dumps_lines(trace):
            fh.write(line + "\n")


def _vec(obj, key, n, lineno):
    v = obj[key]
    if not (isinstance(v, list) and len(v) == n
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise TraceFormatError(f"{key!r} must be a list of {n} numbers", lineno)
    return np.array(v, dtype=float)


def _int(obj, key, lineno):
    v = obj[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise TraceFormatError(f"{key!r} must be an integer", lineno)
    return v


def loads_lines(lines) -> Trace:
    it = iter(enumerate(lines, start=1))
    try:
        lineno, first = next(it)
    except StopIteration:
        raise TraceFormatError("empty trace file", 1) from None
    try:
        meta = json.loads(first)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"metadata is not JSON: {exc.msg}", lineno) from None
    if not isinstance(meta, dict) or meta.get("format") != FORMAT_NAME:
        raise TraceFormatError(f"first line must be a {FORMAT_NAME} metadata object", lineno)
    if meta.get("version") != FORMAT_VERSION:
        raise TraceFormatError(f"unsupported version {meta.get('version')!r}", lineno)
    expected = meta.get("n_samples")
    imu, optical, truth = [], [], []
    last_t = -math.inf
    for lineno, line in it:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"malformed sample: {exc.msg}", lineno) from None
        if not isinstance(obj, dict) or set(obj) != _SAMPLE_KEYS:
            raise TraceFormatError(f"sample must have exactly the keys {sorted(_SAMPLE_KEYS)}", lineno)
        t = obj["t"]
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not t > last_t:
            raise TraceFormatError("timestamps must be numbers and strictly increase", lineno)
        last_t = t
        try:
            imu.append(ImuSample(float(t), _vec(obj, "gyro", 3, lineno), _vec(obj, "accel", 3, lineno),
                                 _vec(obj, "mag", 3, lineno)))
            optical.append(OpticalSample(float(t), _int(obj, "dx", lineno), _int(obj, "dy", lineno),
                                         _int(obj, "squal", lineno)))
            truth.append(PosePoint(float(t), _vec(obj, "gt_pos", 3, lineno),
                                   _vec(obj, "gt_quat", 4, lineno)))
        except InvalidInputError as exc:
            raise TraceFormatError(str(exc), lineno) from None
    if expected is not None and len(optical) != expected:
        raise TraceFormatError(
            f"truncated: expected {expected} samples, found {len(optical)}", len(optical) + 2)
    return Trace(meta, imu, optical, truth)


def read_trace(path) -> Trace:
    with _open(path, "r") as fh:
        try:
            return loads_lines(fh)
        except (EOFError, OSError) as exc:
            raise TraceFormatError(f"unreadable trace: {exc}") from None
