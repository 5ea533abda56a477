"""Compiled RK4 inner loop for batches of four-level trajectories."""

import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB may be too old; workqueue is always available
    numba.config.THREADING_LAYER = "workqueue"

# status codes per trajectory
OK = 0
TRACE_BREACH = 1
HERMITICITY_BREACH = 2
NOT_FINITE = 3


@numba.njit(inline="always")
def _rhs(m0, h, y0, y1, y2, y3):
    # dpsi/dt = m0 @ psi - i h diag(0, 1, -1, 0) psi
    r0 = m0[0, 0] * y0 + m0[0, 1] * y1 + m0[0, 2] * y2 + m0[0, 3] * y3
    r1 = m0[1, 0] * y0 + m0[1, 1] * y1 + m0[1, 2] * y2 + m0[1, 3] * y3 - 1j * h * y1
    r2 = m0[2, 0] * y0 + m0[2, 1] * y1 + m0[2, 2] * y2 + m0[2, 3] * y3 + 1j * h * y2
    r3 = m0[3, 0] * y0 + m0[3, 1] * y1 + m0[3, 2] * y2 + m0[3, 3] * y3
    return r0, r1, r2, r3


@numba.njit(cache=True)
def integrate_one(m0, h, dt, n_steps, stride, tol, sz, im0):
    """Integrate from |up,up>; write outputs at every ``stride``-th step.

    Returns ``(status, step_index, violation)``.
    """
    y0 = 1.0 + 0j
    y1 = 0j
    y2 = 0j
    y3 = 0j
    sz[0] = 1.0
    im0[0] = 0.0
    half = 0.5 * dt
    sixth = dt / 6.0
    k = 0
    for n in range(n_steps):
        ha = h[2 * n]
        hb = h[2 * n + 1]
        hc = h[2 * n + 2]
        a0, a1, a2, a3 = _rhs(m0, ha, y0, y1, y2, y3)
        b0, b1, b2, b3 = _rhs(m0, hb, y0 + half * a0, y1 + half * a1,
                              y2 + half * a2, y3 + half * a3)
        c0, c1, c2, c3 = _rhs(m0, hb, y0 + half * b0, y1 + half * b1,
                              y2 + half * b2, y3 + half * b3)
        d0, d1, d2, d3 = _rhs(m0, hc, y0 + dt * c0, y1 + dt * c1,
                              y2 + dt * c2, y3 + dt * c3)
        y0 += sixth * (a0 + 2.0 * b0 + 2.0 * c0 + d0)
        y1 += sixth * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        y2 += sixth * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        y3 += sixth * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        if (n + 1) % stride == 0:
            k += 1
            scale = max(1.0, abs(y0) + abs(y1) + abs(y2) + abs(y3))
            if not np.isfinite(scale):
                return NOT_FINITE, n + 1, np.inf
            tr = abs(y0 + y3 - 1.0)
            if tr > tol * scale:
                return TRACE_BREACH, n + 1, tr
            herm = max(abs(y0.imag), abs(y3.imag), abs(y1 - np.conj(y2)))
            if herm > tol * scale:
                return HERMITICITY_BREACH, n + 1, herm
            sz[k] = 2.0 * y0.real - 1.0
            im0[k] = y0.imag
    return OK, n_steps, 0.0


@numba.njit(parallel=True, cache=True)
def integrate_batch(m0, h, dt, n_steps, stride, tol, sz, im0, status, where, value):
    for i in numba.prange(h.shape[0]):
        s, w, v = integrate_one(m0, h[i], dt, n_steps, stride, tol, sz[i], im0[i])
        status[i] = s
        where[i] = w
        value[i] = v
