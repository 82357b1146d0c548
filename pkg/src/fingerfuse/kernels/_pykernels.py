"""Pure-Python kernels. Reference implementation and fallback for ``_ckernels``.

Both backends must perform the same floating-point operations in the same
order; tests compare them to ~1e-12.
"""
import math

import numpy as np

# skip heading correction when the tilt-compensated field is this weak
MIN_HORIZONTAL_FIELD = 1e-3


def _step(R, integral, g0, g1, g2, a0, a1, a2, m0, m1, m2, dt, kp, ki, gravity):
    # world up expressed in body = third row of the body->world DCM
    v0, v1, v2 = R[6], R[7], R[8]

    e0 = e1 = e2 = 0.0
    an = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
    if an > 0.0:
        # de-weight samples whose magnitude is far from 1 g (linear acceleration)
        w = 1.0 - 2.0 * abs(1.0 - an / gravity)
        if w > 1.0:
            w = 1.0
        elif w < 0.0:
            w = 0.0
        e0 = (a1 * v2 - a2 * v1) * w
        e1 = (a2 * v0 - a0 * v2) * w
        e2 = (a0 * v1 - a1 * v0) * w

    # magnetometer, tilt-compensated into world, heading error about world up
    hx = R[0] * m0 + R[1] * m1 + R[2] * m2
    hy = R[3] * m0 + R[4] * m1 + R[5] * m2
    hn = math.sqrt(hx * hx + hy * hy)
    if hn >= MIN_HORIZONTAL_FIELD:
        # sin of heading error against magnetic north = world +x, scaled to
        # the same units as the gravity term so one gain pair serves both
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

    # exact rotation for the step: exp([w]x) via Rodrigues
    th2 = w0 * w0 + w1 * w1 + w2 * w2
    if th2 < 1e-16:
        A = 1.0 - th2 / 6.0
        B = 0.5 - th2 / 24.0
    else:
        th = math.sqrt(th2)
        A = math.sin(th) / th
        B = (1.0 - math.cos(th)) / th2
    E = [
        1.0 - B * (w1 * w1 + w2 * w2), -A * w2 + B * w0 * w1, A * w1 + B * w0 * w2,
        A * w2 + B * w0 * w1, 1.0 - B * (w0 * w0 + w2 * w2), -A * w0 + B * w1 * w2,
        -A * w1 + B * w0 * w2, A * w0 + B * w1 * w2, 1.0 - B * (w0 * w0 + w1 * w1),
    ]
    N = [0.0] * 9
    for r in range(3):
        r0, r1, r2 = R[3 * r], R[3 * r + 1], R[3 * r + 2]
        N[3 * r] = r0 * E[0] + r1 * E[3] + r2 * E[6]
        N[3 * r + 1] = r0 * E[1] + r1 * E[4] + r2 * E[7]
        N[3 * r + 2] = r0 * E[2] + r1 * E[5] + r2 * E[8]

    _renormalize(N)
    integral[0], integral[1], integral[2] = i0, i1, i2
    return N


def _renormalize(N):
    # split the X.Y orthogonality error evenly between rows X and Y,
    # rebuild Z = X x Y, then scale each row to unit length
    err = N[0] * N[3] + N[1] * N[4] + N[2] * N[5]
    x0 = N[0] - 0.5 * err * N[3]
    x1 = N[1] - 0.5 * err * N[4]
    x2 = N[2] - 0.5 * err * N[5]
    y0 = N[3] - 0.5 * err * N[0]
    y1 = N[4] - 0.5 * err * N[1]
    y2 = N[5] - 0.5 * err * N[2]
    z0 = x1 * y2 - x2 * y1
    z1 = x2 * y0 - x0 * y2
    z2 = x0 * y1 - x1 * y0
    sx = 1.0 / math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
    sy = 1.0 / math.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
    sz = 1.0 / math.sqrt(z0 * z0 + z1 * z1 + z2 * z2)
    N[0], N[1], N[2] = x0 * sx, x1 * sx, x2 * sx
    N[3], N[4], N[5] = y0 * sy, y1 * sy, y2 * sy
    N[6], N[7], N[8] = z0 * sz, z1 * sz, z2 * sz


def dcm_step(R, integral, gyro, accel, mag, dt, kp, ki, gravity):
    """One filter update. Returns ``(R_new, integral_new)``; inputs untouched."""
    Rl = np.asarray(R, dtype=float).reshape(9).tolist()
    il = np.asarray(integral, dtype=float).tolist()
    g = np.asarray(gyro, dtype=float).tolist()
    a = np.asarray(accel, dtype=float).tolist()
    m = np.asarray(mag, dtype=float).tolist()
    N = _step(Rl, il, g[0], g[1], g[2], a[0], a[1], a[2], m[0], m[1], m[2],
              float(dt), float(kp), float(ki), float(gravity))
    return np.array(N).reshape(3, 3), np.array(il)


def dcm_run(R0, integral0, dts, gyro, accel, mag, kp, ki, gravity):
    """Filter a whole stream; ``dts[k]`` is the step length for sample ``k``.

    Returns ``(Rs, integral)`` with ``Rs`` of shape ``(n, 3, 3)`` holding the
    attitude after each sample.
    """
    n = len(dts)
    R = np.asarray(R0, dtype=float).reshape(9).tolist()
    il = np.asarray(integral0, dtype=float).tolist()
    dl = np.asarray(dts, dtype=float).tolist()
    gl = np.asarray(gyro, dtype=float).reshape(n, 3).tolist()
    al = np.asarray(accel, dtype=float).reshape(n, 3).tolist()
    ml = np.asarray(mag, dtype=float).reshape(n, 3).tolist()
    kp, ki, gravity = float(kp), float(ki), float(gravity)
    out = []
    for k in range(n):
        g, a, m = gl[k], al[k], ml[k]
        R = _step(R, il, g[0], g[1], g[2], a[0], a[1], a[2], m[0], m[1], m[2],
                  dl[k], kp, ki, gravity)
        out.append(R)
    return np.array(out, dtype=float).reshape(n, 3, 3), np.array(il)


def diffuse_quantize(values):
    """Round a sequence to integers, carrying the residue forward.

    The running sum of the output never differs from the running sum of the
    input by more than half a unit.
    """
    out = np.empty(len(values), dtype=np.int64)
    carry = 0.0
    for k, v in enumerate(np.asarray(values, dtype=float).tolist()):
        want = v + carry
        q = math.floor(want + 0.5)
        carry = want - q
        out[k] = q
    return out
