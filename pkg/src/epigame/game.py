"""Strategic-form epidemic game: regional costs on discretised action grids.

Region ``k`` pays ``a_k u_k + b_k u_k**2 + c_k (s0_k - s_k(T, u))``: a
socio-economic term in its own action plus a health term proportional to the
susceptible fraction lost over the horizon.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .sir_core import DEFAULT_STEP, EpidemicParams, final_state, final_states

MONOTONE_TOL = 1e-10
_RANGE_TOL = 1e-12


def _weights(x, name):
    arr = np.array(x, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be a vector of finite nonnegative weights")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CostParams:
    """Linear (``a``), quadratic (``b``) and health (``c``) weights per region."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _weights(getattr(self, name), name))
        if not (self.a.shape == self.b.shape == self.c.shape):
            raise ValueError("a, b and c must have the same length")

    @property
    def K(self):
        return self.a.shape[0]

    def socio(self, u):
        u = np.asarray(u, dtype=float)
        return self.a * u + self.b * u**2


@dataclass(frozen=True, eq=False)
class ActionGrid:
    """Uniform per-region action grids from ``u_min[k]`` to ``u_max[k]`` inclusive.

    A region with ``u_min[k] == u_max[k]`` gets a single-point grid.
    """

    u_min: np.ndarray
    u_max: np.ndarray
    n_points: int = 11
    grids: tuple = field(init=False, repr=False)

    def __post_init__(self):
        lo = np.array(self.u_min, dtype=float)
        hi = np.array(self.u_max, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("u_min and u_max must be vectors of equal length")
        if np.any(lo < 0) or np.any(hi >= 1) or np.any(lo > hi):
            raise ValueError("action bounds must satisfy 0 <= u_min <= u_max < 1")
        if int(self.n_points) < 2:
            raise ValueError("n_points must be at least 2")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "u_min", lo)
        object.__setattr__(self, "u_max", hi)
        object.__setattr__(self, "n_points", int(self.n_points))
        grids = []
        for a, b in zip(lo, hi):
            g = np.array([a]) if a == b else np.linspace(a, b, self.n_points)
            g[-1] = b
            g.setflags(write=False)
            grids.append(g)
        object.__setattr__(self, "grids", tuple(grids))

    @property
    def K(self):
        return self.u_min.shape[0]

    @property
    def shape(self):
        return tuple(len(g) for g in self.grids)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def profiles(self):
        """All grid profiles as an ``(N, K)`` array, last region varying fastest."""
        mesh = np.meshgrid(*self.grids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def index_of(self, k, value):
        """Grid index of ``value`` in region ``k``; raises if off-grid."""
        g = self.grids[k]
        j = int(np.argmin(np.abs(g - value)))
        if abs(g[j] - value) > 1e-9:
            raise ValueError(f"{value} is not on the grid of region {k}")
        return j

    def contains(self, u):
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.u_min - _RANGE_TOL) and np.all(u <= self.u_max + _RANGE_TOL))


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Everything needed to evaluate the game: epidemic, weights, grids, horizon."""

    epidemic: EpidemicParams
    costs: CostParams
    actions: ActionGrid
    T: float = 30.0
    step: float = DEFAULT_STEP
    _key: str = field(init=False, repr=False)

    def __post_init__(self):
        K = self.epidemic.K
        if self.costs.K != K or self.actions.K != K:
            raise ValueError(f"inconsistent region count: epidemic {K}, costs {self.costs.K}, actions {self.actions.K}")
        if not self.T > 0 or not (0 < self.step <= self.T):
            raise ValueError("need T > 0 and 0 < step <= T")
        h = hashlib.sha1(self.epidemic.key.encode())
        for arr in (self.costs.a, self.costs.b, self.costs.c, self.actions.u_min, self.actions.u_max):
            h.update(arr.tobytes())
        h.update(repr((self.actions.n_points, float(self.T), float(self.step))).encode())
        object.__setattr__(self, "_key", h.hexdigest())

    @property
    def K(self):
        return self.epidemic.K

    @property
    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, GameSpec) and other.key == self.key

    def __hash__(self):
        return hash(self._key)

    def with_beta(self, beta):
        return replace(self, epidemic=self.epidemic.with_beta(beta))

    def with_grid_points(self, n_points):
        return replace(self, actions=ActionGrid(self.actions.u_min, self.actions.u_max, n_points))


def _check_in_range(spec, U):
    lo = spec.actions.u_min - _RANGE_TOL
    hi = spec.actions.u_max + _RANGE_TOL
    if np.any(U < lo) or np.any(U > hi):
        raise ValueError("action profile outside the action ranges")


def costs_batch(spec, U):
    """Cost vectors for many profiles; ``U`` is ``(N, K)``, result ``(N, K)``."""
    U = np.atleast_2d(np.array(U, dtype=float))
    _check_in_range(spec, U)
    s, _, _ = final_states(spec.epidemic, U, spec.T, spec.step)
    return spec.costs.socio(U) + spec.costs.c * (spec.epidemic.s0 - s)


def cost(spec, u):
    """Vector of regional costs at profile ``u`` (one ODE solve)."""
    return costs_batch(spec, u)[0]


def social_cost(spec, u):
    return float(np.sum(cost(spec, u)))


def decoupled_cost(spec, k, u_k):
    """Cost region ``k`` would predict for itself if it ignored cross transmission."""
    if not (spec.actions.u_min[k] - _RANGE_TOL <= u_k <= spec.actions.u_max[k] + _RANGE_TOL):
        raise ValueError(f"u_k={u_k} outside the action range of region {k}")
    a, b, c = spec.costs.a[k], spec.costs.b[k], spec.costs.c[k]
    socio = a * u_k + b * u_k**2
    if c == 0:
        return float(socio)
    s, _, _ = final_state(spec.epidemic.restrict(k), [u_k], spec.T, spec.step)
    return float(socio + c * (spec.epidemic.s0[k] - s[0]))


def decoupled_costs(spec, k):
    """:func:`decoupled_cost` over the whole grid of region ``k``."""
    g = spec.actions.grids[k]
    a, b, c = spec.costs.a[k], spec.costs.b[k], spec.costs.c[k]
    socio = a * g + b * g**2
    if c == 0:
        return socio
    s, _, _ = final_states(spec.epidemic.restrict(k), g[:, np.newaxis], spec.T, spec.step)
    return socio + c * (spec.epidemic.s0[k] - s[:, 0])


def unilateral_profiles(spec, k, u):
    """Profiles that vary region ``k`` over its grid with everyone else held at ``u``."""
    g = spec.actions.grids[k]
    U = np.tile(np.asarray(u, dtype=float), (len(g), 1))
    U[:, k] = g
    return U


def own_cost_curve(spec, k, u):
    """``J_k(g, u_{-k})`` for every grid value ``g`` of region ``k``."""
    return costs_batch(spec, unilateral_profiles(spec, k, u))[:, k]


def probe_profiles(spec, n_random=0, seed=0):
    """``u_min``, ``u_max`` and ``n_random`` distinct seeded grid corners."""
    K = spec.K
    lo, hi = spec.actions.u_min, spec.actions.u_max
    probes = [lo.copy(), hi.copy()]
    seen = {(0,) * K, (1,) * K}
    n_corners = 2**K
    rng = np.random.default_rng(seed)
    while len(probes) < 2 + min(n_random, n_corners - 2):
        bits = tuple(int(x) for x in rng.integers(0, 2, size=K))
        if bits in seen:
            continue
        seen.add(bits)
        probes.append(np.where(np.array(bits) == 1, hi, lo))
    return probes


def classify_sequence(values, tol=MONOTONE_TOL):
    """``'constant'``, ``'increasing'``, ``'decreasing'`` or ``'nonmonotone'``.

    Steps smaller than ``tol`` count as ties.
    """
    d = np.diff(np.asarray(values, dtype=float))
    up = bool(np.any(d > tol))
    down = bool(np.any(d < -tol))
    if up and down:
        return "nonmonotone"
    if up:
        return "increasing"
    if down:
        return "decreasing"
    return "constant"


@dataclass(frozen=True)
class MonotonicityReport:
    """Per-region, per-probe shape of the own-cost curve."""

    nonmonotone: frozenset
    verdicts: dict
    probes: list

    def direction(self, k):
        """Common direction across probes, or ``'mixed'``."""
        kinds = set(self.verdicts[k])
        return kinds.pop() if len(kinds) == 1 else "mixed"


def detect_nonmonotone(spec, n_random=0, seed=0, tol=MONOTONE_TOL):
    """Regions whose own-cost curve is non-monotone on the grid for some probe."""
    probes = probe_profiles(spec, n_random, seed)
    verdicts = {}
    for k in range(spec.K):
        verdicts[k] = [classify_sequence(own_cost_curve(spec, k, p), tol) for p in probes]
    flagged = frozenset(k for k, v in verdicts.items() if "nonmonotone" in v)
    return MonotonicityReport(flagged, verdicts, [p.tolist() for p in probes])
