"""Controlled networked SIR dynamics.

Each region ``k`` applies a constant social-distancing intensity ``u_k`` that
scales every incoming transmission rate by ``(1 - u_k)``::

    ds_k/dt = -s_k (1 - u_k) sum_l beta[k, l] i_l
    di_k/dt = -ds_k/dt - gamma_k i_k
    dr_k/dt = gamma_k i_k

The integrator is a classical fixed-step RK4. A vectorised variant advances
many action profiles at once, which is what makes exhaustive grid searches
over the game tractable.
"""

from __future__ import annotations

import hashlib
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

DEFAULT_STEP = 0.05
FD_STEP = 1e-4
_CACHE_DIGITS = 12
_CACHE_LIMIT = 250_000


class IntegrationDiverged(RuntimeError):
    """A non-finite state appeared during integration."""

    def __init__(self, time, region):
        self.time = float(time)
        self.region = int(region)
        super().__init__(f"integration diverged at t={self.time:g} in region {self.region}")


class ConditionViolated(ValueError):
    """A bound was requested outside the regime where it applies."""


def _as_vector(x, name, K=None):
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if K is not None and arr.shape[0] != K:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {K}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EpidemicParams:
    """Transmission network, recovery rates and initial fractions for K regions.

    ``beta[k, l]`` is the rate at which infected of region ``l`` infect the
    susceptibles of region ``k`` (row = receiver).
    """

    beta: np.ndarray
    gamma: np.ndarray
    s0: np.ndarray
    i0: np.ndarray
    _key: str = field(init=False, repr=False)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        if beta.ndim != 2 or beta.shape[0] != beta.shape[1]:
            raise ValueError("beta must be a square matrix")
        K = beta.shape[0]
        if K < 1:
            raise ValueError("at least one region is required")
        if not np.all(np.isfinite(beta)) or np.any(beta < 0):
            raise ValueError("beta entries must be finite and nonnegative")
        beta.setflags(write=False)
        gamma = _as_vector(self.gamma, "gamma", K)
        s0 = _as_vector(self.s0, "s0", K)
        i0 = _as_vector(self.i0, "i0", K)
        if np.any(gamma <= 0):
            raise ValueError("gamma entries must be positive")
        if np.any(s0 <= 0):
            raise ValueError("s0 entries must be positive")
        if np.any(i0 < 0):
            raise ValueError("i0 entries must be nonnegative")
        if np.any(s0 + i0 > 1 + 1e-12):
            raise ValueError("s0 + i0 must not exceed 1")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "i0", i0)
        h = hashlib.sha1()
        for arr in (beta, gamma, s0, i0):
            h.update(np.ascontiguousarray(arr).tobytes())
        object.__setattr__(self, "_key", h.hexdigest())

    @property
    def K(self):
        return self.beta.shape[0]

    @property
    def rho(self):
        """``rho[k, l] = beta[k, l] / gamma[l]``."""
        return self.beta / self.gamma[np.newaxis, :]

    @property
    def x0(self):
        return self.s0 + self.i0

    @property
    def r0(self):
        return np.maximum(1.0 - self.s0 - self.i0, 0.0)

    @property
    def key(self):
        """Content hash, used for memoisation."""
        return self._key

    def __eq__(self, other):
        return isinstance(other, EpidemicParams) and other.key == self.key

    def __hash__(self):
        return hash(self._key)

    def with_beta(self, beta):
        return EpidemicParams(beta, self.gamma, self.s0, self.i0)

    def decoupled(self):
        """Copy with every cross transmission rate set to zero."""
        return self.with_beta(np.diag(np.diag(self.beta)))

    def restrict(self, k):
        """Single-region system for region ``k`` alone."""
        return EpidemicParams(
            self.beta[k : k + 1, k : k + 1], self.gamma[k : k + 1], self.s0[k : k + 1], self.i0[k : k + 1]
        )


@dataclass(frozen=True)
class Trajectory:
    """Compartment fractions at every integration step; arrays are ``(n_times, K)``."""

    times: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray

    @property
    def K(self):
        return self.s.shape[1]

    def final(self):
        return self.s[-1].copy(), self.i[-1].copy(), self.r[-1].copy()


def check_profile(u, K):
    """Validate an action profile and return it as a float array."""
    u = np.array(u, dtype=float)
    if u.shape != (K,):
        raise ValueError(f"action profile must have length {K}, got shape {u.shape}")
    if not np.all(np.isfinite(u)) or np.any(u < 0) or np.any(u >= 1):
        raise ValueError(f"action profile entries must lie in [0, 1): {u}")
    return u


def time_grid(T, step):
    """Uniform grid with spacing ``step`` ending exactly at ``T``."""
    if not T > 0:
        raise ValueError("T must be positive")
    if not (step > 0 and step <= T):
        raise ValueError("step must satisfy 0 < step <= T")
    n = int(np.floor(T / step + 1e-9))
    times = step * np.arange(n + 1, dtype=float)
    if T - times[-1] > 1e-9 * step:
        times = np.append(times, T)
    else:
        times[-1] = T
    return times


class _SolveCounter:
    """Counts single-profile ODE solves (a batch of N profiles counts N)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def add(self, n):
        with self._lock:
            self.value += int(n)

    def reset(self):
        with self._lock:
            self.value = 0


solve_counter = _SolveCounter()


def integrate(params, u, T, step=DEFAULT_STEP):
    """Integrate the controlled dynamics on ``[0, T]`` and store every step.

    Parameters
    ----------
    params : EpidemicParams
    u : array_like, shape (K,)
        Constant action profile with entries in ``[0, 1)``.
    T : float
        Horizon in days.
    step : float
        RK4 step in days. The last step is shortened so the final time is ``T``.

    Returns
    -------
    Trajectory
    """
    u = check_profile(u, params.K)
    times = time_grid(T, step)
    n = times.shape[0]
    K = params.K
    s = np.empty((n, K))
    i = np.empty((n, K))
    r = np.empty((n, K))
    att = (1.0 - u)[:, np.newaxis].copy()
    _kernels.trajectory(att, params.beta, params.gamma, params.s0, params.i0, params.r0, np.diff(times), s, i, r)
    solve_counter.add(1)
    bad = ~(np.isfinite(s) & np.isfinite(i) & np.isfinite(r))
    if bad.any():
        j, k = np.argwhere(bad)[0]
        raise IntegrationDiverged(times[j], k)
    for arr in (times, s, i, r):
        arr.setflags(write=False)
    return Trajectory(times, s, i, r)


def integrate_final_batch(params, U, T, step=DEFAULT_STEP, workers=1):
    """Final states for many action profiles, integrated simultaneously.

    ``U`` has shape ``(N, K)``; returns ``(s, i, r)`` each of shape ``(N, K)``.
    No trajectory is stored and no memoisation is done. Blocks of profiles are
    spread over ``workers`` threads (the compiled kernel releases the GIL).
    """
    U = np.atleast_2d(np.array(U, dtype=float))
    if U.ndim != 2 or U.shape[1] != params.K:
        raise ValueError(f"profiles must have shape (N, {params.K})")
    if not np.all(np.isfinite(U)) or np.any(U < 0) or np.any(U >= 1):
        raise ValueError("action profile entries must lie in [0, 1)")
    times = time_grid(T, step)
    dts = np.diff(times)
    N, K = U.shape
    att = np.ascontiguousarray((1.0 - U).T)
    out = np.empty((3, K, N))
    blocks = [(a, min(a + _kernels.BLOCK, N)) for a in range(0, N, _kernels.BLOCK)]

    def run(block):
        a, b = block
        chunk = np.empty((3, K, b - a))
        _kernels.final_block(
            np.ascontiguousarray(att[:, a:b]), params.beta, params.gamma, params.s0, params.i0, params.r0, dts, chunk
        )
        out[:, :, a:b] = chunk

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    else:
        for block in blocks:
            run(block)
    s, i, r = out[0].T.copy(), out[1].T.copy(), out[2].T.copy()
    solve_counter.add(N)
    bad = ~(np.isfinite(s) & np.isfinite(i) & np.isfinite(r))
    if bad.any():
        # only the final time is inspected in batch mode
        _, k = np.argwhere(bad)[0]
        raise IntegrationDiverged(times[-1], k)
    return s, i, r


class FinalStateCache:
    """Thread-safe memo of final states keyed by (params, u, T, step).

    Racing inserts for one key store identical values, so last writer wins.
    The cache is cleared wholesale once it exceeds ``limit`` entries.
    """

    def __init__(self, limit=_CACHE_LIMIT):
        self.limit = limit
        self._data = {}
        self._lock = threading.Lock()

    @staticmethod
    def make_key(params, u, T, step):
        q = tuple(np.round(np.asarray(u, dtype=float), _CACHE_DIGITS).tolist())
        return (params.key, q, float(T), float(step))

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            if len(self._data) >= self.limit:
                self._data.clear()
            self._data[key] = value

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


final_state_cache = FinalStateCache()


def final_states(params, U, T, step=DEFAULT_STEP):
    """Memoised batch version of :func:`final_state`; returns three ``(N, K)`` arrays."""
    U = np.atleast_2d(np.array(U, dtype=float))
    N, K = U.shape
    keys = [final_state_cache.make_key(params, row, T, step) for row in U]
    out = np.empty((N, 3, K))
    missing = []
    for n, key in enumerate(keys):
        hit = final_state_cache.get(key)
        if hit is None:
            missing.append(n)
        else:
            out[n] = hit
    if missing:
        s, i, r = integrate_final_batch(params, U[missing], T, step)
        fresh = np.stack([s, i, r], axis=1)
        for j, n in enumerate(missing):
            fresh[j].setflags(write=False)
            final_state_cache.put(keys[n], fresh[j])
            out[n] = fresh[j]
    return out[:, 0], out[:, 1], out[:, 2]


def final_state(params, u, T, step=DEFAULT_STEP):
    """``(s(T), i(T), r(T))`` for a single profile, memoised."""
    u = check_profile(u, params.K)
    s, i, r = final_states(params, u[np.newaxis, :], T, step)
    return s[0], i[0], r[0]


def conservation_residual(params, u, traj):
    """Largest violation of the first integral along a stored trajectory.

    Along exact solutions ``(1 - u_k) sum_l rho[k, l] (s_l + i_l - x0_l) + ln(s0_k / s_k)``
    stays at zero, so the returned value measures integration error only.
    """
    u = check_profile(u, params.K)
    if np.any(traj.s <= 0):
        raise ValueError("susceptible fraction reached zero; logarithm undefined")
    drift = (traj.s + traj.i - params.x0) @ params.rho.T
    F = (1.0 - u) * drift + np.log(params.s0 / traj.s)
    return float(np.max(np.abs(F)))


def sensitivity_fd(params, u, T, step, k, l, h=FD_STEP):
    """Central-difference estimate of d s_k(T) / d u_l."""
    u = check_profile(u, params.K)
    if h <= 0:
        raise ValueError("h must be positive")
    if u[l] - h < 0 or u[l] + h >= 1:
        raise ValueError(f"perturbed action u[{l}] +/- {h} leaves [0, 1)")
    U = np.array([u, u])
    U[0, l] += h
    U[1, l] -= h
    s, _, _ = final_states(params, U, T, step)
    return float((s[0, k] - s[1, k]) / (2 * h))


def lemma1_bound(params, u, T, step, k):
    """Lower bound on d s_k(T) / d u_k valid while the interconnection is weak.

    Returns ``s ln(s / s0_k) / ((1 - u_k) ((1 - u_k) rho_kk s - 1))`` with
    ``s = s_k(T, u)``; the denominator must be negative.
    """
    u = check_profile(u, params.K)
    s = final_state(params, u, T, step)[0][k]
    a = 1.0 - u[k]
    denom = a * (a * params.rho[k, k] * s - 1.0)
    if denom >= 0:
        raise ConditionViolated(f"bound not applicable for region {k}: denominator {denom:g} >= 0")
    return float(s * np.log(s / params.s0[k]) / denom)
