"""Contact, tap, double-tap and press recognition from SQUAL + motion deltas.

The recognizer is a pure function of ``(state, sample)``. Rules:

* Contact begins when SQUAL rises to ``contact_squal_threshold`` and ends when
  it falls below it.
* A contact is a tap if it lasts at most ``tap_window`` and no in-contact
  frame moved more than ``tap_max_delta`` counts on either axis. A contact
  that produced a press is never a tap.
* A tap is held for up to ``doubletap_window`` waiting for a partner. A
  second tap completing inside that window, whose contact started within
  ``doubletap_max_offset`` counts (per axis) of the first one's start,
  yields a single DoubleTap instead of two Taps. Otherwise the held tap is
  released as a Tap once it can no longer pair.
* Press fires once per contact after SQUAL stays at or above
  ``press_squal_threshold`` for ``press_dwell``.

The accumulated location resets at each ContactBegin and keeps integrating
deltas after lift-off, so at the next ContactBegin it holds the offset
between the two contact starts.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Tuple

from .errors import InvalidInputError
from .optical import SQUAL_MAX, OpticalSample


@dataclass(frozen=True)
class GestureConfig:
    texture_name: str = "mousepad"
    contact_squal_threshold: int = 40
    tap_window: float = 300.0          # ms
    tap_max_delta: int = 5             # counts
    doubletap_window: float = 300.0    # ms
    doubletap_max_offset: int = 15     # counts
    press_squal_threshold: int = 120
    press_dwell: float = 100.0         # ms

    def __post_init__(self):
        if not 0 < self.contact_squal_threshold <= self.press_squal_threshold <= SQUAL_MAX:
            raise InvalidInputError(
                "need 0 < contact_squal_threshold <= press_squal_threshold <= 169")
        if not 200 <= self.doubletap_window <= 500:
            raise InvalidInputError("doubletap_window must be within [200, 500] ms")
        if self.tap_window <= 0 or self.press_dwell < 0:
            raise InvalidInputError("windows must be positive")
        if self.tap_max_delta < 0 or self.doubletap_max_offset < 0:
            raise InvalidInputError("movement tolerances must be nonnegative")


MOUSEPAD = GestureConfig()


class EventKind(enum.Enum):
    CONTACT_BEGIN = "ContactBegin"
    CONTACT_END = "ContactEnd"
    TAP = "Tap"
    DOUBLE_TAP = "DoubleTap"
    PRESS = "Press"


class Phase(enum.Enum):
    IDLE = "Idle"
    IN_CONTACT = "InContact"
    PRESSED = "Pressed"


@dataclass(frozen=True)
class GestureEvent:
    kind: EventKind
    t: float
    location: Tuple[int, int]


@dataclass(frozen=True)
class PendingTap:
    t: float                      # completion time, seconds
    location: Tuple[int, int]


@dataclass(frozen=True)
class GestureState:
    config: GestureConfig = MOUSEPAD
    phase: Phase = Phase.IDLE
    last_t: Optional[float] = None
    contact_start_t: Optional[float] = None
    accumulated: Tuple[int, int] = (0, 0)
    contact_still: bool = True            # no frame exceeded tap_max_delta
    press_since: Optional[float] = None
    last_tap: Optional[PendingTap] = None
    # offset from the pending tap's contact start to the current contact start
    pair_offset: Optional[Tuple[int, int]] = None


def feature_count(squal: int) -> int:
    if not 0 <= squal <= SQUAL_MAX:
        raise InvalidInputError(f"squal must be in [0, {SQUAL_MAX}]")
    return squal * 4


def _release(state: GestureState, t: float, events: List[GestureEvent]) -> GestureState:
    events.append(GestureEvent(EventKind.TAP, t, state.last_tap.location))
    return replace(state, last_tap=None, pair_offset=None)


def gesture_update(state: GestureState, sample: OpticalSample):
    """Feed one frame; returns ``(new_state, events)``."""
    if state.last_t is not None and sample.t <= state.last_t:
        raise InvalidInputError(f"sample time {sample.t} does not follow {state.last_t}")
    cfg = state.config
    events: List[GestureEvent] = []
    tap_window = cfg.tap_window / 1000.0
    dt_window = cfg.doubletap_window / 1000.0

    # a held tap that can no longer pair is released at its deadline
    if state.last_tap is not None and sample.t > state.last_tap.t + dt_window:
        state = _release(state, state.last_tap.t + dt_window, events)

    ax, ay = state.accumulated
    in_contact = sample.squal >= cfg.contact_squal_threshold

    if state.phase is Phase.IDLE:
        if in_contact:
            pair = (ax + sample.dx, ay + sample.dy) if state.last_tap is not None else None
            state = replace(state, phase=Phase.IN_CONTACT, contact_start_t=sample.t,
                            accumulated=(0, 0), pair_offset=pair,
                            contact_still=_still(sample, cfg), press_since=None)
            events.append(GestureEvent(EventKind.CONTACT_BEGIN, sample.t, (0, 0)))
            state = _track_press(state, sample, events)
        else:
            state = replace(state, accumulated=(ax + sample.dx, ay + sample.dy))
    else:
        acc = (ax + sample.dx, ay + sample.dy)
        if in_contact:
            state = replace(state, accumulated=acc,
                            contact_still=state.contact_still and _still(sample, cfg))
            state = _track_press(state, sample, events)
        else:
            events.append(GestureEvent(EventKind.CONTACT_END, sample.t, acc))
            was_pressed = state.phase is Phase.PRESSED
            is_tap = (not was_pressed and state.contact_still
                      and sample.t - state.contact_start_t <= tap_window)
            state = replace(state, phase=Phase.IDLE, accumulated=acc, press_since=None)
            if is_tap:
                state = _complete_tap(state, sample.t, acc, dt_window, events)

    return replace(state, last_t=sample.t), events


def _still(sample: OpticalSample, cfg: GestureConfig) -> bool:
    return abs(sample.dx) <= cfg.tap_max_delta and abs(sample.dy) <= cfg.tap_max_delta


def _track_press(state: GestureState, sample: OpticalSample, events) -> GestureState:
    cfg = state.config
    if state.phase is Phase.PRESSED:
        return state
    if sample.squal < cfg.press_squal_threshold:
        return replace(state, press_since=None)
    since = sample.t if state.press_since is None else state.press_since
    if sample.t - since >= cfg.press_dwell / 1000.0 - 1e-9:
        events.append(GestureEvent(EventKind.PRESS, sample.t, state.accumulated))
        return replace(state, phase=Phase.PRESSED, press_since=since)
    return replace(state, press_since=since)


def _complete_tap(state: GestureState, t: float, loc, dt_window: float, events) -> GestureState:
    cfg = state.config
    held = state.last_tap
    if held is not None:
        off = state.pair_offset
        if (t - held.t <= dt_window and off is not None
                and abs(off[0]) <= cfg.doubletap_max_offset
                and abs(off[1]) <= cfg.doubletap_max_offset):
            events.append(GestureEvent(EventKind.DOUBLE_TAP, t, loc))
            return replace(state, last_tap=None, pair_offset=None)
        state = _release(state, t, events)
    return replace(state, last_tap=PendingTap(t, loc), pair_offset=None)


def gesture_flush(state: GestureState):
    """Release a held tap at its deadline (end of stream)."""
    events: List[GestureEvent] = []
    if state.last_tap is not None:
        deadline = state.last_tap.t + state.config.doubletap_window / 1000.0
        state = _release(state, deadline, events)
    return state, events


def recognize(samples, config: GestureConfig = MOUSEPAD, flush: bool = True) -> List[GestureEvent]:
    state = GestureState(config)
    out: List[GestureEvent] = []
    for s in samples:
        state, ev = gesture_update(state, s)
        out.extend(ev)
    if flush:
        out.extend(gesture_flush(state)[1])
    return out


# ------------------------------------------------------------ config files

_INT_KEYS = {"contact_squal_threshold", "tap_max_delta", "doubletap_max_offset",
             "press_squal_threshold"}
_FLOAT_KEYS = {"tap_window", "doubletap_window", "press_dwell"}


def parse_config(text: str) -> GestureConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unset keys keep defaults."""
    known = {f.name for f in fields(GestureConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key == "name":
            key = "texture_name"
        if key not in known:
            raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise InvalidInputError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return GestureConfig(**values)


def format_config(cfg: GestureConfig) -> str:
    lines = [f"name = {cfg.texture_name}"]
    for f in fields(GestureConfig):
        if f.name != "texture_name":
            lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> GestureConfig:
    with open(path) as fh:
        return parse_config(fh.read())
