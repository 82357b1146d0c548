import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fingerfuse import geom
from fingerfuse.errors import InvalidInputError

S = math.sqrt(0.5)

unit_quats = st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))


def test_identity_quat_gives_identity_matrix():
    assert np.array_equal(geom.quat_to_dcm(geom.IDENTITY_QUAT), np.eye(3))


def test_quarter_turn_about_z_maps_x_to_y():
    R = geom.quat_to_dcm([S, 0, 0, S])
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@given(unit_quats)
def test_double_cover(q):
    assert np.allclose(geom.quat_to_dcm(q), geom.quat_to_dcm(-q), atol=1e-15)


@given(unit_quats)
def test_dcm_is_orthonormal_and_round_trips(q):
    R = geom.quat_to_dcm(q)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
    back = geom.dcm_to_quat(R)
    assert min(np.abs(back - q).max(), np.abs(back + q).max()) < 1e-9


def test_non_unit_quaternion_rejected():
    with pytest.raises(InvalidInputError):
        geom.quat_to_dcm([1.0, 0.01, 0, 0])


def test_euler_zero_is_identity():
    assert np.allclose(geom.euler_to_quat((0, 0, 0)), [1, 0, 0, 0])


def test_rotate_y_about_x():
    assert np.allclose(geom.rotate(geom.rot_x(math.pi / 2), [0, 1, 0]), [0, 0, 1], atol=1e-15)


def test_euler_round_trip():
    e = (0.1, 0.2, 0.3)
    out = geom.dcm_to_euler(geom.quat_to_dcm(geom.euler_to_quat(e)))
    assert np.allclose(out, e, atol=1e-9)


def test_euler_against_reference_rotations(frozen):
    for row in frozen["rotations"]:
        q = geom.euler_to_quat(row["euler"])
        assert np.allclose(q, row["quat"], atol=1e-12)
        assert np.allclose(geom.euler_to_dcm(row["euler"]), row["dcm"], atol=1e-12)
        assert np.allclose(geom.quat_to_euler(row["quat"]), row["euler"], atol=1e-9)


def test_gimbal_lock_extraction_is_consistent():
    for pitch in (math.pi / 2, -math.pi / 2):
        R = geom.euler_to_dcm((0.4, pitch, 0.1))
        e = geom.dcm_to_euler(R)
        assert e.roll == 0.0
        assert np.allclose(geom.euler_to_dcm(e), R, atol=1e-9)


def test_hamilton_product():
    qx, qy = geom.rot_x(0.3), geom.rot_y(-0.8)
    v = np.array([0.2, -1.0, 0.5])
    composed = geom.rotate(geom.quat_multiply(qx, qy), v)
    assert np.allclose(composed, geom.rotate(qx, geom.rotate(qy, v)), atol=1e-14)


def test_axis_angle():
    q = geom.quat_from_axis_angle([0, 0, 2], math.pi / 2)
    assert np.allclose(q, [S, 0, 0, S])


@pytest.mark.parametrize("u,v,expected", [
    ((0, 1, 0), (0, 1, 0), 0.0),
    ((0, 1, 0), (0, 0, 1), math.pi / 2),
    ((1, 1, 0), (1, 0, 0), math.pi / 4),
    ((1, 0, 0), (-1, 0, 0), math.pi),
])
def test_angle_between(u, v, expected):
    assert geom.angle_between(u, v) == pytest.approx(expected, abs=1e-12)


def test_angle_between_zero_vector():
    with pytest.raises(InvalidInputError):
        geom.angle_between((0, 0, 0), (1, 0, 0))


def test_ray_requires_unit_direction():
    r = geom.Ray((1, 2, 3), (0, 0, 1))
    assert np.allclose(r.at(2.0), [1, 2, 5])
    with pytest.raises(InvalidInputError):
        geom.Ray((0, 0, 0), (0, 0, 2))
