"""Line protocol emitted by the device.

One ASCII line per report::

    q1, q2, q3, q4, dx, dy, tap, doubletap

Four decimal quaternion components, two signed integer count deltas and two
single-character flags. ``O, O`` is no gesture, ``X, O`` a tap and ``X, X``
a double-tap; ``O, X`` is illegal. The wire carries no timestamps.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Tuple

import numpy as np

from .errors import ProtocolError

N_FIELDS = 8
_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)")
_INT_RE = re.compile(r"[+-]?\d+")
LEGAL_FLAGS = {("O", "O"): None, ("X", "O"): "tap", ("X", "X"): "doubletap"}


@dataclass(frozen=True)
class WireFrame:
    q: Tuple[float, float, float, float]
    dx: int
    dy: int
    tap_flag: str = "O"
    dtap_flag: str = "O"

    @property
    def gesture(self) -> Optional[str]:
        return LEGAL_FLAGS.get((self.tap_flag, self.dtap_flag))

    @classmethod
    def with_gesture(cls, q, dx: int, dy: int, gesture: Optional[str] = None) -> "WireFrame":
        flags = {None: ("O", "O"), "tap": ("X", "O"), "doubletap": ("X", "X")}[gesture]
        return cls(tuple(float(v) for v in q), int(dx), int(dy), *flags)


def parse_line(line: str) -> WireFrame:
    """Parse one line; raises :class:`ProtocolError` naming the bad field."""
    text = line.rstrip("\r\n")
    parts = text.split(",")
    if len(parts) != N_FIELDS:
        field = len(parts) + 1 if len(parts) < N_FIELDS else N_FIELDS + 1
        raise ProtocolError(f"expected {N_FIELDS} fields, got {len(parts)}", field)
    parts = [p.strip() for p in parts]
    q = []
    for i in range(4):
        if not _FLOAT_RE.fullmatch(parts[i]):
            raise ProtocolError(f"not a decimal number: {parts[i]!r}", i + 1)
        q.append(float(parts[i]))
    ints = []
    for i in (4, 5):
        if not _INT_RE.fullmatch(parts[i]):
            raise ProtocolError(f"not an integer: {parts[i]!r}", i + 1)
        ints.append(int(parts[i]))
    for i in (6, 7):
        if parts[i] not in ("X", "O"):
            raise ProtocolError(f"flag must be X or O, got {parts[i]!r}", i + 1)
    if (parts[6], parts[7]) not in LEGAL_FLAGS:
        raise ProtocolError("double-tap flag set without tap flag", 8)
    return WireFrame(tuple(q), ints[0], ints[1], parts[6], parts[7])


def _fmt(x: float) -> str:
    s = np.format_float_positional(x, precision=6, unique=False, fractional=False, trim="-")
    return "0" if s in ("-0", "0") else s


def emit_line(frame: WireFrame) -> str:
    """Canonical text for ``frame``, newline-terminated."""
    if len(frame.q) != 4:
        raise ProtocolError("quaternion needs 4 components")
    for i, v in enumerate(frame.q):
        if not math.isfinite(v):
            raise ProtocolError("quaternion components must be finite", i + 1)
    for i, v in ((5, frame.dx), (6, frame.dy)):
        if not isinstance(v, (int, np.integer)):
            raise ProtocolError("deltas must be integers", i)
    for i, f in ((7, frame.tap_flag), (8, frame.dtap_flag)):
        if f not in ("X", "O"):
            raise ProtocolError(f"flag must be X or O, got {f!r}", i)
    if (frame.tap_flag, frame.dtap_flag) not in LEGAL_FLAGS:
        raise ProtocolError("double-tap flag set without tap flag", 8)
    fields = [_fmt(float(v)) for v in frame.q] + [str(int(frame.dx)), str(int(frame.dy)),
                                                  frame.tap_flag, frame.dtap_flag]
    return ", ".join(fields) + "\n"


def read_frames(lines: Iterable[str]) -> Iterator[Tuple[int, WireFrame]]:
    """Yield ``(line_number, frame)``; blank lines are skipped."""
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield n, parse_line(line)
        except ProtocolError as exc:
            err = ProtocolError(f"line {n}: {exc}")
            err.field = exc.field
            raise err from None


def frame_times(n: int, report_rate: float = 50.0, t0: float = 0.0) -> List[float]:
    return [t0 + k / report_rate for k in range(n)]
