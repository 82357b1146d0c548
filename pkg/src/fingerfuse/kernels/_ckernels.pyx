# cython: language_level=3
"""Compiled kernels; mirror ``_pykernels`` operation for operation."""
import numpy as np
from libc.math cimport sqrt, sin, cos, fabs, floor

cdef double MIN_HORIZONTAL_FIELD = 1e-3


cdef void _renormalize(double* N) noexcept nogil:
    cdef double err = N[0] * N[3] + N[1] * N[4] + N[2] * N[5]
    cdef double x0 = N[0] - 0.5 * err * N[3]
    cdef double x1 = N[1] - 0.5 * err * N[4]
    cdef double x2 = N[2] - 0.5 * err * N[5]
    cdef double y0 = N[3] - 0.5 * err * N[0]
    cdef double y1 = N[4] - 0.5 * err * N[1]
    cdef double y2 = N[5] - 0.5 * err * N[2]
    cdef double z0 = x1 * y2 - x2 * y1
    cdef double z1 = x2 * y0 - x0 * y2
    cdef double z2 = x0 * y1 - x1 * y0
    cdef double sx = 1.0 / sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    cdef double sy = 1.0 / sqrt(y0 * y0 + y1 * y1 + y2 * y2)
    cdef double sz = 1.0 / sqrt(z0 * z0 + z1 * z1 + z2 * z2)
    N[0] = x0 * sx; N[1] = x1 * sx; N[2] = x2 * sx
    N[3] = y0 * sy; N[4] = y1 * sy; N[5] = y2 * sy
    N[6] = z0 * sz; N[7] = z1 * sz; N[8] = z2 * sz


cdef void _step(double* R, double* integral, double g0, double g1, double g2,
                double a0, double a1, double a2, double m0, double m1, double m2,
                double dt, double kp, double ki, double gravity) noexcept nogil:
    cdef double v0 = R[6], v1 = R[7], v2 = R[8]
    cdef double e0 = 0.0, e1 = 0.0, e2 = 0.0
    cdef double an = sqrt(a0 * a0 + a1 * a1 + a2 * a2)
    cdef double w, hx, hy, hn, ey, i0, i1, i2, w0, w1, w2, th2, th, A, B
    cdef double E[9]
    cdef double N[9]
    cdef double r0, r1, r2
    cdef int r

    if an > 0.0:
        w = 1.0 - 2.0 * fabs(1.0 - an / gravity)
        if w > 1.0:
            w = 1.0
        elif w < 0.0:
            w = 0.0
        e0 = (a1 * v2 - a2 * v1) * w
        e1 = (a2 * v0 - a0 * v2) * w
        e2 = (a0 * v1 - a1 * v0) * w

    hx = R[0] * m0 + R[1] * m1 + R[2] * m2
    hy = R[3] * m0 + R[4] * m1 + R[5] * m2
    hn = sqrt(hx * hx + hy * hy)
    if hn >= MIN_HORIZONTAL_FIELD:
        ey = -hy / hn * gravity
        e0 += v0 * ey
        e1 += v1 * ey
        e2 += v2 * ey

    i0 = integral[0] + ki * e0 * dt
    i1 = integral[1] + ki * e1 * dt
    i2 = integral[2] + ki * e2 * dt

    w0 = (g0 + kp * e0 + i0) * dt
    w1 = (g1 + kp * e1 + i1) * dt
    w2 = (g2 + kp * e2 + i2) * dt

    th2 = w0 * w0 + w1 * w1 + w2 * w2
    if th2 < 1e-16:
        A = 1.0 - th2 / 6.0
        B = 0.5 - th2 / 24.0
    else:
        th = sqrt(th2)
        A = sin(th) / th
        B = (1.0 - cos(th)) / th2
    E[0] = 1.0 - B * (w1 * w1 + w2 * w2); E[1] = -A * w2 + B * w0 * w1; E[2] = A * w1 + B * w0 * w2
    E[3] = A * w2 + B * w0 * w1; E[4] = 1.0 - B * (w0 * w0 + w2 * w2); E[5] = -A * w0 + B * w1 * w2
    E[6] = -A * w1 + B * w0 * w2; E[7] = A * w0 + B * w1 * w2; E[8] = 1.0 - B * (w0 * w0 + w1 * w1)

    for r in range(3):
        r0 = R[3 * r]; r1 = R[3 * r + 1]; r2 = R[3 * r + 2]
        N[3 * r] = r0 * E[0] + r1 * E[3] + r2 * E[6]
        N[3 * r + 1] = r0 * E[1] + r1 * E[4] + r2 * E[7]
        N[3 * r + 2] = r0 * E[2] + r1 * E[5] + r2 * E[8]

    _renormalize(N)
    for r in range(9):
        R[r] = N[r]
    integral[0] = i0
    integral[1] = i1
    integral[2] = i2


def dcm_step(R, integral, gyro, accel, mag, double dt, double kp, double ki, double gravity):
    cdef double[::1] Rv = np.array(R, dtype=np.float64).reshape(9)
    cdef double[::1] iv = np.array(integral, dtype=np.float64).reshape(3)
    cdef double[::1] g = np.ascontiguousarray(gyro, dtype=np.float64).reshape(3)
    cdef double[::1] a = np.ascontiguousarray(accel, dtype=np.float64).reshape(3)
    cdef double[::1] m = np.ascontiguousarray(mag, dtype=np.float64).reshape(3)
    _step(&Rv[0], &iv[0], g[0], g[1], g[2], a[0], a[1], a[2], m[0], m[1], m[2],
          dt, kp, ki, gravity)
    return np.asarray(Rv).reshape(3, 3), np.asarray(iv)


def dcm_run(R0, integral0, dts, gyro, accel, mag, double kp, double ki, double gravity):
    cdef Py_ssize_t n = len(dts)
    cdef double[::1] d = np.ascontiguousarray(dts, dtype=np.float64).reshape(n)
    cdef double[:, ::1] g = np.ascontiguousarray(gyro, dtype=np.float64).reshape(n, 3)
    cdef double[:, ::1] a = np.ascontiguousarray(accel, dtype=np.float64).reshape(n, 3)
    cdef double[:, ::1] m = np.ascontiguousarray(mag, dtype=np.float64).reshape(n, 3)
    out_arr = np.empty((n, 9), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] iv = np.array(integral0, dtype=np.float64).reshape(3)
    cdef double R[9]
    cdef Py_ssize_t k
    cdef int j
    cdef double[::1] r0 = np.ascontiguousarray(R0, dtype=np.float64).reshape(9)
    for j in range(9):
        R[j] = r0[j]
    with nogil:
        for k in range(n):
            _step(R, &iv[0], g[k, 0], g[k, 1], g[k, 2], a[k, 0], a[k, 1], a[k, 2],
                  m[k, 0], m[k, 1], m[k, 2], d[k], kp, ki, gravity)
            for j in range(9):
                out[k, j] = R[j]
    return out_arr.reshape(n, 3, 3), np.asarray(iv)


def diffuse_quantize(values):
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t n = v.shape[0], k
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef double carry = 0.0, want, q
    for k in range(n):
        want = v[k] + carry
        q = floor(want + 0.5)
        carry = want - q
        out[k] = <long long>q
    return out_arr
