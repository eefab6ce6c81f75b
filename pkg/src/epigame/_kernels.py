"""Compiled RK4 kernels.

State arrays are laid out ``(K, B)``: one row per region, one column per
action profile, so the inner loops run over profiles and vectorise. The
trajectory and batch drivers share :func:`_rk4_step`, which keeps their
results bit-identical.
"""

import numba
import numpy as np

BLOCK = 256


@numba.njit(cache=True, nogil=True)
def _rhs(s, i, att, beta, gamma, ds, di, dr):
    K, B = s.shape
    for k in range(K):
        for n in range(B):
            ds[k, n] = 0.0
        for l in range(K):
            b = beta[k, l]
            if b != 0.0:
                for n in range(B):
                    ds[k, n] += b * i[l, n]
        g = gamma[k]
        for n in range(B):
            inf = s[k, n] * att[k, n] * ds[k, n]
            rec = g * i[k, n]
            ds[k, n] = -inf
            di[k, n] = inf - rec
            dr[k, n] = rec


@numba.njit(cache=True, nogil=True)
def _stage(s, i, h, ds, di, ts, ti):
    K, B = s.shape
    for k in range(K):
        for n in range(B):
            ts[k, n] = s[k, n] + h * ds[k, n]
            ti[k, n] = i[k, n] + h * di[k, n]


@numba.njit(cache=True, nogil=True)
def _rk4_step(s, i, r, att, beta, gamma, dt, work):
    # work[0:12] holds (ds, di, dr) for the four stages, work[12:14] the stage state
    ts = work[12]
    ti = work[13]
    h = 0.5 * dt
    _rhs(s, i, att, beta, gamma, work[0], work[1], work[2])
    _stage(s, i, h, work[0], work[1], ts, ti)
    _rhs(ts, ti, att, beta, gamma, work[3], work[4], work[5])
    _stage(s, i, h, work[3], work[4], ts, ti)
    _rhs(ts, ti, att, beta, gamma, work[6], work[7], work[8])
    _stage(s, i, dt, work[6], work[7], ts, ti)
    _rhs(ts, ti, att, beta, gamma, work[9], work[10], work[11])
    w = dt / 6.0
    K, B = s.shape
    for k in range(K):
        for n in range(B):
            s[k, n] += w * (work[0, k, n] + 2.0 * work[3, k, n] + 2.0 * work[6, k, n] + work[9, k, n])
            i[k, n] += w * (work[1, k, n] + 2.0 * work[4, k, n] + 2.0 * work[7, k, n] + work[10, k, n])
            r[k, n] += w * (work[2, k, n] + 2.0 * work[5, k, n] + 2.0 * work[8, k, n] + work[11, k, n])


@numba.njit(cache=True, nogil=True)
def final_block(att, beta, gamma, s0, i0, r0, dts, out):
    """Advance a ``(K, B)`` block of profiles to the final time; write ``out[0:3]``."""
    K, B = att.shape
    s = np.empty((K, B))
    i = np.empty((K, B))
    r = np.empty((K, B))
    for k in range(K):
        s[k, :] = s0[k]
        i[k, :] = i0[k]
        r[k, :] = r0[k]
    work = np.empty((14, K, B))
    for dt in dts:
        _rk4_step(s, i, r, att, beta, gamma, dt, work)
    out[0] = s
    out[1] = i
    out[2] = r


@numba.njit(cache=True, nogil=True)
def trajectory(att, beta, gamma, s0, i0, r0, dts, S, I, R):
    """Single profile; ``att`` is ``(K, 1)`` and ``S, I, R`` are ``(n_times, K)``."""
    K = att.shape[0]
    s = np.empty((K, 1))
    i = np.empty((K, 1))
    r = np.empty((K, 1))
    for k in range(K):
        s[k, 0] = s0[k]
        i[k, 0] = i0[k]
        r[k, 0] = r0[k]
        S[0, k] = s0[k]
        I[0, k] = i0[k]
        R[0, k] = r0[k]
    work = np.empty((14, K, 1))
    for j in range(dts.shape[0]):
        _rk4_step(s, i, r, att, beta, gamma, dts[j], work)
        for k in range(K):
            S[j + 1, k] = s[k, 0]
            I[j + 1, k] = i[k, 0]
            R[j + 1, k] = r[k, 0]
