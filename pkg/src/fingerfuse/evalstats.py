"""Trajectory error metrics, aggregation and significance tests.

Tail probabilities come from :mod:`fingerfuse.stats`.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError
from .fusion import PosePoint
from .stats import f_sf

# ---------------------------------------------------------------------- ANOVA

@dataclass(frozen=True)
class AnovaResult:
    df_between: int
    df_within: int
    ss_between: float
    ss_within: float
    ms_between: float
    ms_within: float
    F: float
    p: float


def anova_from_sums(ss_between: float, df_between: int, ss_within: float,
                    df_within: int) -> AnovaResult:
    if df_between < 1 or df_within < 1:
        raise InvalidInputError("ANOVA needs positive degrees of freedom")
    if ss_between < 0 or ss_within < 0:
        raise InvalidInputError("sums of squares must be nonnegative")
    msb = ss_between / df_between
    msw = ss_within / df_within
    if msw == 0.0:
        # no within-group spread: any between-group spread is infinitely significant
        F = math.inf if msb > 0 else 0.0
    else:
        F = msb / msw
    return AnovaResult(df_between, df_within, ss_between, ss_within, msb, msw, F,
                       f_sf(F, df_between, df_within))


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    if len(groups) < 2:
        raise InvalidInputError("ANOVA needs at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(len(g) < 2 for g in arrays):
        raise InvalidInputError("every ANOVA group needs at least two samples")
    grand = np.concatenate(arrays).mean()
    ss_between = float(sum(len(g) * (g.mean() - grand) ** 2 for g in arrays))
    ss_within = float(sum(((g - g.mean()) ** 2).sum() for g in arrays))
    n = sum(len(g) for g in arrays)
    return anova_from_sums(ss_between, len(arrays) - 1, ss_within, n - len(arrays))


# ------------------------------------------------------------ trajectory error

@dataclass(frozen=True)
class ErrorSeries:
    t: np.ndarray
    position: np.ndarray      # mm
    orientation: np.ndarray   # degrees

    def __len__(self):
        return len(self.t)


def align_start(test: Sequence[PosePoint], truth: Sequence[PosePoint]) -> List[PosePoint]:
    """Translate ``test`` so its first position coincides with ``truth``'s."""
    if not test or not truth:
        raise InvalidInputError("align_start needs nonempty sequences")
    shift = truth[0].position - test[0].position
    if not np.any(shift):
        return list(test)
    return [PosePoint(p.t, p.position + shift, p.orientation) for p in test]


def _forward_axes(quats: np.ndarray) -> np.ndarray:
    # second column of each rotation matrix: the body +y axis in world frame
    w, x, y, z = quats.T
    return np.stack([2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)], axis=1)


def _nearest(truth_t: np.ndarray, t: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(truth_t, t)
    idx = np.clip(idx, 1, len(truth_t) - 1) if len(truth_t) > 1 else np.zeros_like(idx)
    if len(truth_t) > 1:
        left = idx - 1
        pick_left = np.abs(t - truth_t[left]) <= np.abs(truth_t[idx] - t)
        idx = np.where(pick_left, left, idx)
    return idx


def error_series(test: Sequence[PosePoint], truth: Sequence[PosePoint]) -> ErrorSeries:
    """Per-timestep Euclidean position error and forward-axis angle error.

    Truth is resampled onto the test timestamps by nearest neighbour; a gap
    of more than half the truth sampling period is an error.
    """
    if not test or not truth:
        raise InvalidInputError("error_series needs nonempty sequences")
    t = np.array([p.t for p in test])
    tt = np.array([p.t for p in truth])
    if len(tt) == len(t) and np.array_equal(tt, t):
        idx = np.arange(len(t))
    else:
        idx = _nearest(tt, t)
        half = 0.5 * float(np.median(np.diff(tt))) if len(tt) > 1 else 0.0
        gap = np.abs(tt[idx] - t)
        if np.any(gap > half + 1e-12):
            k = int(np.argmax(gap > half + 1e-12))
            raise InvalidInputError(
                f"test sample {k} at t={t[k]} has no truth sample within half a period")
    pos = np.array([p.position for p in test])
    tpos = np.array([truth[i].position for i in idx])
    pos_err = np.linalg.norm(pos - tpos, axis=1)

    fa = _forward_axes(np.array([p.orientation for p in test]))
    fb = _forward_axes(np.array([truth[i].orientation for i in idx]))
    cos = np.einsum("ij,ij->i", fa, fb) / (np.linalg.norm(fa, axis=1) * np.linalg.norm(fb, axis=1))
    ori_err = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    return ErrorSeries(t, pos_err, ori_err)


# ---------------------------------------------------------------- aggregation

@dataclass(frozen=True)
class Summary:
    n: int
    position_mean: float
    position_sd: float
    orientation_mean: float
    orientation_sd: float


@dataclass
class EvalReport:
    """Pooled and per-group error statistics. Standard deviations are population σ."""

    pooled: Summary
    groups: Dict[str, Dict[str, Summary]] = field(default_factory=dict)
    anova: Dict[str, AnovaResult] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pooled": asdict(self.pooled),
            "groups": {k: {v: asdict(s) for v, s in g.items()} for k, g in self.groups.items()},
            "anova": {k: asdict(a) for k, a in self.anova.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "value", "n", "position_mean_mm", "position_sd_mm",
                    "orientation_mean_deg", "orientation_sd_deg"])
        rows = [("all", "all", self.pooled)]
        rows += [(k, v, s) for k, g in self.groups.items() for v, s in g.items()]
        for k, v, s in rows:
            w.writerow([k, v, s.n, f"{s.position_mean:.6f}", f"{s.position_sd:.6f}",
                        f"{s.orientation_mean:.6f}", f"{s.orientation_sd:.6f}"])
        return buf.getvalue()


def _summarize(pos: np.ndarray, ori: np.ndarray) -> Summary:
    return Summary(len(pos), float(pos.mean()), float(pos.std()),
                   float(ori.mean()), float(ori.std()))


def _sort_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


def aggregate(records: Sequence[Tuple[Mapping[str, object], ErrorSeries]],
              group_keys: Optional[Iterable[str]] = None) -> EvalReport:
    """Pool error series and break them down by each metadata key.

    ``records`` pairs a metadata mapping (e.g. texture, size, shape) with the
    series for one trace. Group values are ordered numerically, then by name.
    """
    if not records:
        raise InvalidInputError("aggregate needs at least one series")
    pos = np.concatenate([s.position for _, s in records])
    ori = np.concatenate([s.orientation for _, s in records])
    report = EvalReport(_summarize(pos, ori))
    if group_keys is None:
        group_keys = sorted({k for meta, _ in records for k in meta})
    for key in group_keys:
        buckets = defaultdict(list)
        for meta, s in records:
            if key in meta:
                buckets[meta[key]].append(s)
        report.groups[key] = {
            str(v): _summarize(np.concatenate([s.position for s in buckets[v]]),
                               np.concatenate([s.orientation for s in buckets[v]]))
            for v in sorted(buckets, key=_sort_key)
        }
    return report


def cell_anova(records: Sequence[Tuple[Mapping[str, object], ErrorSeries]], factor: str,
               cell_keys: Sequence[str]) -> AnovaResult:
    """ANOVA of mean position error across levels of ``factor``.

    Each observation is the mean error of one design cell (all traces
    sharing ``cell_keys``), so repetitions are averaged first.
    """
    cells = defaultdict(list)
    for meta, s in records:
        cells[tuple(meta[k] for k in cell_keys)].append(s.position)
    fi = list(cell_keys).index(factor)
    levels = defaultdict(list)
    for cell in sorted(cells, key=lambda c: tuple(_sort_key(v) for v in c)):
        levels[cell[fi]].append(float(np.concatenate(cells[cell]).mean()))
    return one_way_anova([levels[v] for v in sorted(levels, key=_sort_key)])
