import numpy as np
import pytest

from fingerfuse import geom, kernels
from fingerfuse.kernels import _pykernels

try:
    from fingerfuse.kernels import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
if _ckernels is not None:
    BACKENDS.append(pytest.param(_ckernels, id="cython"))


def _random_inputs(rng, n):
    R0 = geom.quat_to_dcm(geom.quat_normalize(rng.normal(size=4)))
    return dict(
        R0=R0, integral0=rng.normal(0, 0.01, 3), dts=np.full(n, 0.02),
        gyro=rng.normal(0, 0.5, (n, 3)),
        accel=rng.normal(0, 1.0, (n, 3)) + [0, 0, 9.8],
        mag=rng.normal(0, 0.1, (n, 3)) + [0.5, 0, -0.8],
    )


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(_ckernels is None, reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(3)
    a = _random_inputs(rng, 500)
    py, cy = _pykernels, _ckernels
    Rp, ip = py.dcm_run(a["R0"], a["integral0"], a["dts"], a["gyro"], a["accel"], a["mag"], 0.2, 0.005, 9.80665)
    Rc, ic = cy.dcm_run(a["R0"], a["integral0"], a["dts"], a["gyro"], a["accel"], a["mag"], 0.2, 0.005, 9.80665)
    assert np.abs(Rp - Rc).max() < 1e-12
    assert np.abs(ip - ic).max() < 1e-12
    v = rng.normal(0, 3, 1000)
    assert np.array_equal(py.diffuse_quantize(v), cy.diffuse_quantize(v))


@pytest.mark.parametrize("backend", BACKENDS)
def test_step_matches_run(backend):
    rng = np.random.default_rng(4)
    a = _random_inputs(rng, 20)
    R, integral = a["R0"], a["integral0"]
    for k in range(20):
        R, integral = backend.dcm_step(R, integral, a["gyro"][k], a["accel"][k], a["mag"][k],
                                       0.02, 0.2, 0.005, 9.80665)
    Rs, i2 = backend.dcm_run(a["R0"], a["integral0"], a["dts"], a["gyro"], a["accel"], a["mag"],
                             0.2, 0.005, 9.80665)
    assert np.allclose(Rs[-1], R, atol=1e-14)
    assert np.allclose(i2, integral, atol=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
def test_step_does_not_mutate_inputs(backend):
    R = np.eye(3)
    integral = np.zeros(3)
    backend.dcm_step(R, integral, [0.1, 0, 0], [0, 1, 9], [1, 0, 0], 0.02, 0.2, 0.005, 9.80665)
    assert np.array_equal(R, np.eye(3)) and not integral.any()


@pytest.mark.parametrize("backend", BACKENDS)
def test_diffuse_quantize_bounds_cumulative_error(backend):
    rng = np.random.default_rng(5)
    v = rng.normal(0, 4, 5000)
    q = backend.diffuse_quantize(v)
    assert q.dtype == np.int64
    assert np.abs(np.cumsum(q) - np.cumsum(v)).max() <= 0.5 + 1e-9


def test_python_kernel_exports_threshold():
    assert _pykernels.MIN_HORIZONTAL_FIELD == kernels.MIN_HORIZONTAL_FIELD


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, FINGERFUSE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import fingerfuse.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
