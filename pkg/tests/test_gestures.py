import pytest
from hypothesis import given, settings, strategies as st

from fingerfuse.errors import InvalidInputError
from fingerfuse.gestures import (MOUSEPAD, EventKind as K, GestureConfig, GestureState,
                                 feature_count, format_config, gesture_flush, gesture_update,
                                 parse_config, recognize)
from fingerfuse.optical import OpticalSample


def frames(*rows):
    """rows of (t_ms, squal, dx, dy)"""
    return [OpticalSample(t / 1000.0, dx, dy, q) for t, q, dx, dy in rows]


def kinds(events):
    return [e.kind for e in events]


def tap_at(t0, dx_before=0, dy_before=0, squal=45):
    """lift frame carrying travel, contact for 100 ms, lift"""
    return [(t0 - 20, 0, dx_before, dy_before), (t0, squal, 0, 0), (t0 + 100, squal, 1, -1),
            (t0 + 200, 0, 0, 0)]


@pytest.mark.parametrize("q,expected", [(0, 0), (40, 160), (169, 676)])
def test_feature_count(q, expected):
    assert feature_count(q) == expected


def test_feature_count_range():
    with pytest.raises(InvalidInputError):
        feature_count(170)


def test_tap():
    ev = recognize(frames((-20, 0, 0, 0), (0, 45, 0, 0), (100, 45, 3, -5), (200, 0, 0, 0)))
    assert kinds(ev) == [K.CONTACT_BEGIN, K.CONTACT_END, K.TAP]
    assert ev[0].t == 0.0 and ev[1].t == 0.2
    assert ev[2].t == pytest.approx(0.5)   # released once no partner can follow


def test_tap_rejected_by_motion():
    ev = recognize(frames((-20, 0, 0, 0), (0, 45, 0, 0), (100, 45, 12, 0), (200, 0, 0, 0)))
    assert kinds(ev) == [K.CONTACT_BEGIN, K.CONTACT_END]


def test_tap_rejected_by_threshold():
    assert recognize(frames((0, 0, 0, 0), (20, 39, 0, 0), (40, 35, 0, 0), (60, 0, 0, 0))) == []


def test_tap_rejected_by_duration():
    ev = recognize(frames((0, 45, 0, 0), (200, 45, 0, 0), (400, 0, 0, 0)))
    assert K.TAP not in kinds(ev)


def test_double_tap_within_window_and_offset():
    rows = tap_at(0) + tap_at(250, 10, -8)
    ev = recognize(frames(*rows))
    assert kinds(ev) == [K.CONTACT_BEGIN, K.CONTACT_END] * 2 + [K.DOUBLE_TAP]
    assert ev[-1].t == pytest.approx(0.45)


def test_double_tap_out_of_window():
    ev = recognize(frames(*(tap_at(0) + tap_at(800))))
    assert kinds(ev).count(K.TAP) == 2 and K.DOUBLE_TAP not in kinds(ev)


def test_double_tap_out_of_offset():
    ev = recognize(frames(*(tap_at(0) + tap_at(250, 15, 0))))
    assert kinds(ev).count(K.TAP) == 2 and K.DOUBLE_TAP not in kinds(ev)
    # first tap jitters by (1, -1) in contact, so this offset is exactly (15, -15)
    ev = recognize(frames(*(tap_at(0) + tap_at(250, 14, -14))))
    assert kinds(ev).count(K.DOUBLE_TAP) == 1


def test_window_edge():
    # completions exactly 300 ms apart still pair; 320 ms do not
    assert K.DOUBLE_TAP in kinds(recognize(frames(*(tap_at(0) + tap_at(300)))))
    assert K.DOUBLE_TAP not in kinds(recognize(frames(*(tap_at(0) + tap_at(320)))))


def test_held_tap_released_when_superseded():
    rows = tap_at(0) + tap_at(250, 40, 0) + [(600, 0, 0, 0)]
    ev = recognize(frames(*rows), flush=False)
    taps = [e for e in ev if e.kind is K.TAP]
    assert [e.t for e in taps] == [pytest.approx(0.45)]


def test_press_fires_once():
    rows = [(0, 0, 0, 0), (20, 60, 0, 0), (40, 130, 0, 0), (60, 130, 0, 0), (80, 130, 0, 0),
            (100, 130, 0, 0), (120, 130, 0, 0), (140, 130, 0, 0), (160, 130, 0, 0),
            (180, 130, 0, 0), (200, 60, 0, 0), (220, 0, 0, 0)]
    ev = recognize(frames(*rows))
    assert kinds(ev) == [K.CONTACT_BEGIN, K.PRESS, K.CONTACT_END]
    assert ev[1].t == pytest.approx(0.14)


def test_press_needs_dwell():
    rows = [(0, 45, 0, 0), (20, 130, 0, 0), (60, 130, 0, 0), (100, 60, 0, 0), (120, 0, 0, 0)]
    assert K.PRESS not in kinds(recognize(frames(*rows)))


def test_contact_locations():
    ev = recognize(frames((0, 45, 0, 0), (20, 45, 30, 40), (40, 45, 5, 5), (60, 0, 0, 0)))
    assert ev[0].location == (0, 0)
    assert ev[1].location == (35, 45)


def test_non_increasing_time_rejected():
    s, _ = gesture_update(GestureState(), OpticalSample(1.0, 0, 0, 0))
    with pytest.raises(InvalidInputError):
        gesture_update(s, OpticalSample(1.0, 0, 0, 0))


def test_flush_releases_at_deadline():
    state = GestureState()
    for f in frames(*tap_at(0)):
        state, _ = gesture_update(state, f)
    state, ev = gesture_flush(state)
    assert kinds(ev) == [K.TAP] and ev[0].t == pytest.approx(0.5)
    assert gesture_flush(state)[1] == []


def test_deterministic():
    rows = frames(*(tap_at(0) + tap_at(250, 3, 3) + tap_at(1000) + [(1500, 130, 0, 0),
                                                                       (1700, 130, 0, 0), (1800, 0, 0, 0)]))
    first = recognize(rows)
    for _ in range(100):
        assert recognize(rows) == first


def test_config_validation():
    with pytest.raises(InvalidInputError):
        GestureConfig(doubletap_window=150)
    with pytest.raises(InvalidInputError):
        GestureConfig(contact_squal_threshold=130, press_squal_threshold=120)


def test_config_round_trip():
    cfg = GestureConfig(texture_name="wood", contact_squal_threshold=32, doubletap_window=450)
    assert parse_config(format_config(cfg)) == cfg
    assert parse_config("# defaults\n") == MOUSEPAD


def test_config_errors():
    with pytest.raises(InvalidInputError, match="line 2"):
        parse_config("name = jeans\nbogus = 3\n")
    with pytest.raises(InvalidInputError, match="line 1"):
        parse_config("tap_window = soon\n")


stream = st.lists(st.tuples(st.integers(0, 169), st.integers(-8, 8), st.integers(-8, 8)),
                  max_size=120)


@settings(max_examples=200)
@given(stream)
def test_event_stream_is_well_formed(rows):
    samples = [OpticalSample(k * 0.02, dx, dy, q) for k, (q, dx, dy) in enumerate(rows)]
    ev = recognize(samples)
    contact = [e.kind for e in ev if e.kind in (K.CONTACT_BEGIN, K.CONTACT_END)]
    assert contact == [K.CONTACT_BEGIN, K.CONTACT_END] * (len(contact) // 2) + \
        [K.CONTACT_BEGIN] * (len(contact) % 2)
    begins = contact.count(K.CONTACT_BEGIN)
    k = kinds(ev)
    assert k.count(K.TAP) + 2 * k.count(K.DOUBLE_TAP) <= begins
    assert k.count(K.PRESS) <= begins
    assert [e.t for e in ev] == sorted(e.t for e in ev)
