"""Optical-flow sensor model: units, speed-dependent count distortion, calibration.

The sensor over-reports counts as movement speed rises. The distortion is
modelled as a polynomial in speed (inch/s) giving the counts reported for a
one-inch traverse; per-frame deltas are scaled by that curve relative to its
zero-speed value, and :func:`correct_counts` undoes the scaling.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateFitError, InvalidInputError, OutOfRangeError
from .stats import f_sf, t_ppf2, t_sf2

log = logging.getLogger(__name__)

MM_PER_INCH = 25.4
SQUAL_MAX = 169
MAX_CALIBRATED_SPEED = 7.0


@dataclass(frozen=True)
class SensorConfig:
    resolution: int = 400      # counts per inch
    frame_rate: int = 1500     # frames per second
    report_rate: float = 50.0  # Hz

    def __post_init__(self):
        if self.resolution <= 0 or self.frame_rate <= 0 or self.report_rate <= 0:
            raise InvalidInputError("sensor configuration values must be positive")

    @property
    def report_interval(self) -> float:
        return 1.0 / self.report_rate


@dataclass(frozen=True)
class OpticalSample:
    t: float
    dx: int
    dy: int
    squal: int

    def __post_init__(self):
        if not isinstance(self.squal, (int, np.integer)) or not 0 <= self.squal <= SQUAL_MAX:
            raise InvalidInputError(f"squal must be an integer in [0, {SQUAL_MAX}], got {self.squal!r}")
        for name in ("dx", "dy"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise InvalidInputError(f"{name} must be an integer count")
        if not math.isfinite(self.t):
            raise InvalidInputError("sample time must be finite")


@dataclass(frozen=True)
class AccelerationModel:
    """Counts reported over a one-inch traverse as a polynomial in speed.

    ``coefficients`` are in ascending order: ``c0 + c1*s + c2*s**2 (+ c3*s**3)``.
    """

    resolution: int
    coefficients: Tuple[float, ...]
    valid_speed_range: Tuple[float, float] = (0.0, MAX_CALIBRATED_SPEED)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.coefficients) not in (3, 4):
            raise InvalidInputError("acceleration model must be quadratic or cubic")
        grid = np.linspace(*self.valid_speed_range, 71)
        if np.any(np.polynomial.polynomial.polyval(grid, self.coefficients) <= 0):
            raise InvalidInputError("acceleration model must stay positive over its speed range")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


# Fits to the measured 1-inch traverse counts at each resolution.
MODEL_400CPI = AccelerationModel(400, (410.8021, 10.4840, -1.4685))
MODEL_800CPI = AccelerationModel(800, (780.3591, 63.1833, -14.6930, 1.0582))
STOCK_MODELS = {400: MODEL_400CPI, 800: MODEL_800CPI}


def counts_to_mm(counts, cfg: SensorConfig = SensorConfig()):
    return counts / cfg.resolution * MM_PER_INCH


def mm_to_counts(mm, cfg: SensorConfig = SensorConfig()):
    return mm / MM_PER_INCH * cfg.resolution


def model_counts(m: AccelerationModel, speed: float) -> float:
    lo, hi = m.valid_speed_range
    if not lo <= speed <= hi:
        raise OutOfRangeError(f"speed {speed} ips outside calibrated range [{lo}, {hi}]")
    # Horner, ascending coefficients
    acc = 0.0
    for c in reversed(m.coefficients):
        acc = acc * speed + c
    return acc


def distort_counts(true_counts: float, speed: float, m: AccelerationModel) -> float:
    return true_counts * (model_counts(m, speed) / model_counts(m, 0.0))


def correct_counts(reported: float, speed: float, m: AccelerationModel) -> float:
    return reported * (model_counts(m, 0.0) / model_counts(m, speed))


def clamp_speed(speed: float, m: AccelerationModel) -> float:
    """Clamp to the model's range, warning when the upper bound is exceeded."""
    lo, hi = m.valid_speed_range
    if speed > hi:
        log.warning("speed %.2f ips beyond calibrated %.1f ips; clamping", speed, hi)
        return hi
    return max(speed, lo)


# ----------------------------------------------------------------- calibration

@dataclass(frozen=True)
class CalibrationSample:
    speed: float   # inch/s over the 1-inch traverse
    counts: int

    def __post_init__(self):
        if not self.speed >= 0:
            raise InvalidInputError("calibration speed must be nonnegative")


@dataclass(frozen=True)
class PolyFit:
    model: AccelerationModel
    r_squared: float
    std_errors: Tuple[float, ...]
    p_values: Tuple[float, ...]
    conf_int: Tuple[Tuple[float, float], ...]   # 95% per coefficient
    f_statistic: float
    f_p_value: float
    dof: int

    def to_dict(self) -> dict:
        return {
            "resolution": self.model.resolution,
            "degree": self.model.degree,
            "coefficients": list(self.model.coefficients),
            "std_errors": list(self.std_errors),
            "p_values": list(self.p_values),
            "conf_int_95": [list(ci) for ci in self.conf_int],
            "r_squared": self.r_squared,
            "f_statistic": self.f_statistic,
            "f_p_value": self.f_p_value,
            "dof": self.dof,
        }


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    f_statistic: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _arrays(samples) -> Tuple[np.ndarray, np.ndarray]:
    x = np.array([s.speed for s in samples], dtype=float)
    y = np.array([s.counts for s in samples], dtype=float)
    return x, y


def _ols(x: np.ndarray, y: np.ndarray, degree: int):
    """Least squares on the Vandermonde design via Householder QR."""
    X = np.vander(x, degree + 1, increasing=True)
    # scale columns so the rank test is not fooled by s**3 magnitudes
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Q, R = np.linalg.qr(X / scale)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * diag.max():
        raise DegenerateFitError("design matrix is rank deficient")
    beta_s = np.linalg.solve(R, Q.T @ y)
    resid = y - (X / scale) @ beta_s
    R_inv = np.linalg.solve(R, np.eye(len(R)))
    # (X^T X)^-1 in the original coefficient units
    cov_unit = (R_inv @ R_inv.T) / np.outer(scale, scale)
    return beta_s / scale, resid, cov_unit


def _r_squared(y: np.ndarray, ss_res: float) -> float:
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def fit_polynomial(samples: Sequence[CalibrationSample], degree: int,
                   resolution: int = 400) -> PolyFit:
    """Fit counts against speed with a quadratic or cubic polynomial.

    Coefficient p-values are two-sided t-tests on ``n - degree - 1`` degrees
    of freedom; the overall F-test compares against the intercept-only model.
    """
    if degree not in (2, 3):
        raise InvalidInputError("degree must be 2 or 3")
    x, y = _arrays(samples)
    n = len(x)
    if n < degree + 2:
        raise InvalidInputError(f"need at least {degree + 2} samples for degree {degree}")
    if len(np.unique(x)) < 2:
        raise DegenerateFitError("need at least two distinct speeds")
    beta, resid, cov_unit = _ols(x, y, degree)
    dof = n - degree - 1
    ss_res = float(resid @ resid)
    sigma2 = ss_res / dof
    se = np.sqrt(np.diag(cov_unit) * sigma2)
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, np.abs(beta) / se, np.inf)
    p = tuple(t_sf2(float(t), dof) for t in tvals)
    crit = t_ppf2(0.05, dof)
    ci = tuple((float(b - crit * s), float(b + crit * s)) for b, s in zip(beta, se))
    r2 = _r_squared(y, ss_res)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_reg = max(ss_tot - ss_res, 0.0)
    if sigma2 == 0.0:
        F = math.inf if ss_reg > 0 else 0.0
    else:
        F = (ss_reg / degree) / sigma2
    model = AccelerationModel(resolution, tuple(float(b) for b in beta))
    return PolyFit(model, r2, tuple(float(s) for s in se), p, ci, F, f_sf(F, degree, dof), dof)


def fit_linear(samples: Sequence[CalibrationSample], max_speed: float = 3.0) -> LinearFit:
    """Straight-line fit of counts on speed over ``[0, max_speed]`` ips.

    Slope significance comes from the F-test on 1 and ``n - 2`` degrees of
    freedom.
    """
    kept = [s for s in samples if 0.0 <= s.speed <= max_speed]
    x, y = _arrays(kept)
    n = len(x)
    if n < 3:
        raise InvalidInputError("need at least 3 samples in the speed window")
    if len(np.unique(x)) < 2:
        raise DegenerateFitError("need at least two distinct speeds")
    beta, resid, _ = _ols(x, y, 1)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_reg = max(ss_tot - ss_res, 0.0)
    ms_res = ss_res / (n - 2)
    if ms_res == 0.0:
        F = math.inf if ss_reg > 0 else 0.0
    else:
        F = ss_reg / ms_res
    slope = float(beta[1])
    if ss_reg == 0.0:
        slope = 0.0
    return LinearFit(slope, float(beta[0]), _r_squared(y, ss_res), F, f_sf(F, 1, n - 2), n)


def simulate_calibration(model: AccelerationModel, n: int, noise_sd: float,
                         rng: np.random.Generator,
                         speed_range: Tuple[float, float] = (0.0, MAX_CALIBRATED_SPEED),
                         rounded: bool = True) -> List[CalibrationSample]:
    """Draw ``n`` one-inch traverse readings at uniform random speeds."""
    speeds = rng.uniform(*speed_range, size=n)
    counts = np.polynomial.polynomial.polyval(speeds, model.coefficients)
    counts = counts + rng.normal(0.0, noise_sd, size=n)
    if rounded:
        counts = np.rint(counts).astype(int)
    return [CalibrationSample(float(s), c.item()) for s, c in zip(speeds, counts)]


def read_calibration_csv(path) -> List[CalibrationSample]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["speed_ips", "counts"]:
            raise InvalidInputError(f"{path}: expected header 'speed_ips,counts'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise InvalidInputError(f"{path}:{lineno}: expected 2 columns")
            try:
                speed = float(row[0])
                counts = float(row[1])
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
            out.append(CalibrationSample(speed, int(counts) if counts.is_integer() else counts))
    return out


def write_calibration_csv(path, samples: Iterable[CalibrationSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["speed_ips", "counts"])
        for s in samples:
            w.writerow([repr(float(s.speed)), s.counts])
