import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fingerfuse import geom
from fingerfuse.ahrs import (STANDARD_GRAVITY as G, AhrsGains, ImuSample, ahrs_init, ahrs_run,
                             ahrs_update, attitude_from_reference)
from fingerfuse.errors import InvalidInputError

NORTH = np.array([1.0, 0.0, 0.0])
UP_G = np.array([0.0, 0.0, G])


def static_stream(q_true, seconds, rate=50.0, gyro=(0, 0, 0)):
    R = geom.quat_to_dcm(q_true)
    n = int(round(seconds * rate)) + 1
    return [ImuSample(k / rate, gyro, R.T @ UP_G, R.T @ NORTH) for k in range(n)]


def attitude_error_deg(R, q_true):
    Rt = geom.quat_to_dcm(q_true)
    c = (np.trace(Rt.T @ R) - 1) / 2
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def test_default_init_is_identity():
    s = ahrs_init()
    assert np.array_equal(s.attitude, np.eye(3))
    assert s.gains == AhrsGains(0.2, 0.005)


def test_initial_attitude_is_kept():
    q = geom.euler_to_quat((0, math.radians(30), 0))
    assert np.allclose(ahrs_init(initial_attitude=q).attitude, geom.quat_to_dcm(q))


def test_negative_gain_rejected():
    with pytest.raises(InvalidInputError):
        ahrs_init((-1.0, 0.0))


@pytest.mark.parametrize("roll,pitch", [(5, 0), (0, -5), (3, 4), (-4, -3)])
def test_stationary_levels_within_five_seconds(roll, pitch):
    start = geom.euler_to_quat((math.radians(roll), math.radians(pitch), 0))
    _, Rs = ahrs_run(ahrs_init(initial_attitude=start), static_stream(geom.IDENTITY_QUAT, 5.0))
    e = geom.dcm_to_euler(Rs[-1])
    assert abs(math.degrees(e.roll)) <= 0.5
    assert abs(math.degrees(e.pitch)) <= 0.5


def test_gyro_only_constant_rate_yaw():
    stream = static_stream(geom.IDENTITY_QUAT, 1.0, gyro=(0, 0, 1.0))
    _, Rs = ahrs_run(ahrs_init((0.0, 0.0)), stream)
    assert geom.dcm_to_euler(Rs[-1]).yaw == pytest.approx(1.0, abs=1e-3)


def test_rolled_device_converges_to_roll():
    q_true = geom.rot_x(math.radians(30))
    accel = np.array([0, G * math.sin(math.radians(30)), G * math.cos(math.radians(30))])
    stream = static_stream(q_true, 10.0)
    assert np.allclose(stream[0].accel, accel)
    _, Rs = ahrs_run(ahrs_init(), stream)
    assert math.degrees(geom.dcm_to_euler(Rs[-1]).roll) == pytest.approx(30.0, abs=0.5)
    # the accelerometer-only formula agrees
    assert math.degrees(math.atan2(accel[1], accel[2])) == pytest.approx(30.0)


def test_update_fold_matches_batch():
    rng = np.random.default_rng(11)
    q_true = geom.euler_to_quat((0.2, -0.1, 0.7))
    stream = static_stream(q_true, 2.0, gyro=(0.01, -0.02, 0.03))
    state = ahrs_init()
    for s in stream:
        state, q = ahrs_update(state, s)
    batch_state, Rs = ahrs_run(ahrs_init(), stream)
    assert np.allclose(Rs[-1], state.attitude, atol=1e-13)
    assert np.allclose(batch_state.integral_error, state.integral_error, atol=1e-13)
    assert np.allclose(geom.quat_to_dcm(q), state.attitude, atol=1e-12)


def test_timestamps_must_increase():
    s = ImuSample(0.0, (0, 0, 0), UP_G, NORTH)
    state, _ = ahrs_update(ahrs_init(), s)
    with pytest.raises(InvalidInputError):
        ahrs_update(state, s)
    with pytest.raises(InvalidInputError):
        ahrs_run(ahrs_init(), [s, ImuSample(0.5, (0, 0, 0), UP_G, NORTH)])


def test_oversized_accel_rejected():
    with pytest.raises(InvalidInputError):
        ImuSample(0.0, (0, 0, 0), (0, 0, 25 * G), NORTH)


def test_zero_accel_skips_gravity_correction():
    stream = [ImuSample(k / 50, (0.5, 0, 0), (0, 0, 0), (0, 0, 0)) for k in range(51)]
    _, Rs = ahrs_run(ahrs_init(), stream)
    assert geom.dcm_to_euler(Rs[-1]).roll == pytest.approx(0.5, abs=1e-9)


def test_triad_recovers_attitude():
    q = geom.euler_to_quat((0.4, -1.1, 2.5))
    R = geom.quat_to_dcm(q)
    mag_world = np.array([math.cos(1.0), 0, -math.sin(1.0)])
    est = attitude_from_reference(R.T @ UP_G, R.T @ mag_world)
    assert attitude_error_deg(geom.quat_to_dcm(est), q) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=3, max_size=3), st.integers(0, 2**31))
def test_output_stays_a_rotation(gyro, seed):
    rng = np.random.default_rng(seed)
    stream = [ImuSample(k / 50, gyro, rng.normal(0, 3, 3) + UP_G, rng.normal(0, 0.3, 3) + NORTH)
              for k in range(100)]
    _, Rs = ahrs_run(ahrs_init(), stream)
    for R in Rs[::10]:
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("axis", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1), (1, -2, 0.5)])
def test_convergence_is_monotone_until_settled(axis):
    start = geom.quat_from_axis_angle(axis, math.radians(30))
    _, Rs = ahrs_run(ahrs_init(initial_attitude=start), static_stream(geom.IDENTITY_QUAT, 10.0))
    err = np.array([attitude_error_deg(R, geom.IDENTITY_QUAT) for R in Rs])
    settled = int(np.argmax(err <= 0.5))
    assert settled > 0
    assert np.all(np.diff(err[:settled + 1]) <= 1e-12)
    assert err[settled:].max() <= 0.5
