"""Grid Nash equilibria, social optimum, best-response dynamics, PoA and PoC."""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .game import costs_batch, decoupled_costs, own_cost_curve
from .sir_core import integrate_final_batch

IMPROVE_TOL = 1e-12
DEFAULT_BUDGET = 1_000_000


class BudgetExceeded(ValueError):
    def __init__(self, required, budget):
        self.required = int(required)
        self.budget = int(budget)
        super().__init__(f"grid has {self.required} profiles, budget is {self.budget}")


class NoEquilibrium(RuntimeError):
    pass


class DegenerateScenario(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class CostTable:
    """Costs of every grid profile. ``J`` has shape ``grid_shape + (K,)``."""

    grids: tuple
    J: np.ndarray

    @property
    def shape(self):
        return self.J.shape[:-1]

    @property
    def social(self):
        return self.J.sum(axis=-1)

    def profile(self, index):
        return np.array([g[j] for g, j in zip(self.grids, index)])


_tables = OrderedDict()
_tables_lock = threading.Lock()
_TABLES_KEPT = 4


def cost_table(spec, budget=DEFAULT_BUDGET, workers=1):
    """Evaluate every grid profile once (one ODE solve each) and cache the table."""
    with _tables_lock:
        hit = _tables.get(spec.key)
        if hit is not None:
            _tables.move_to_end(spec.key)
            return hit
    size = spec.actions.size
    if size > budget:
        raise BudgetExceeded(size, budget)
    U = spec.actions.profiles()
    s, _, _ = integrate_final_batch(spec.epidemic, U, spec.T, spec.step, workers=workers)
    J = spec.costs.socio(U) + spec.costs.c * (spec.epidemic.s0 - s)
    J = J.reshape(spec.actions.shape + (spec.K,))
    J.setflags(write=False)
    table = CostTable(spec.actions.grids, J)
    with _tables_lock:
        _tables[spec.key] = table
        while len(_tables) > _TABLES_KEPT:
            _tables.popitem(last=False)
    return table


def clear_tables():
    with _tables_lock:
        _tables.clear()


def _argmin_low(values, tol=IMPROVE_TOL):
    """First index whose value is within ``tol`` of the minimum."""
    values = np.asarray(values)
    return int(np.flatnonzero(values <= values.min() + tol)[0])


def ne_mask(table, tol=IMPROVE_TOL):
    """Boolean array over the grid: no player has a strictly improving deviation."""
    mask = np.ones(table.shape, dtype=bool)
    for k in range(table.J.shape[-1]):
        Jk = table.J[..., k]
        mask &= Jk <= Jk.min(axis=k, keepdims=True) + tol
    return mask


def enumerate_ne(spec, budget=DEFAULT_BUDGET, workers=1):
    """All pure Nash equilibria of the grid game, in lexicographic order."""
    table = cost_table(spec, budget, workers)
    return [table.profile(idx) for idx in np.argwhere(ne_mask(table))]


def is_grid_ne(spec, u, tol=IMPROVE_TOL):
    """Re-check ``u`` by evaluating every unilateral grid deviation directly."""
    u = np.asarray(u, dtype=float)
    here = costs_batch(spec, u)[0]
    for k in range(spec.K):
        if own_cost_curve(spec, k, u).min() < here[k] - tol:
            return False
    return True


def social_optimum(spec, budget=DEFAULT_BUDGET, workers=1):
    """Grid minimiser of the social cost; ties go to the lexicographically smallest profile."""
    table = cost_table(spec, budget, workers)
    sc = table.social.ravel()
    flat = _argmin_low(sc)
    return table.profile(np.unravel_index(flat, table.shape)), float(sc[flat])


def best_response(spec, k, u_minus_k):
    """Grid argmin of ``J_k(., u_{-k})``, ties toward the smallest action.

    ``u_minus_k`` is either the other ``K - 1`` actions or a full profile whose
    ``k``-th entry is ignored.
    """
    u = np.asarray(u_minus_k, dtype=float)
    if u.shape == (spec.K - 1,):
        u = np.insert(u, k, spec.actions.u_min[k])
    elif u.shape != (spec.K,):
        raise ValueError(f"expected {spec.K - 1} or {spec.K} actions")
    return float(spec.actions.grids[k][_argmin_low(own_cost_curve(spec, k, u))])


@dataclass(frozen=True)
class BRDTrace:
    iterates: list
    converged: bool
    rounds: int
    final_is_ne: bool

    @property
    def final(self):
        return self.iterates[-1]


def sequential_brd(spec, u_init, max_rounds=100):
    """Players 1..K update in turn; stop after a round with no change.

    ``iterates`` holds the starting profile and the profile after each round.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    u = np.array([spec.actions.grids[k][spec.actions.index_of(k, x)] for k, x in enumerate(u_init)])
    iterates = [u.copy()]
    converged = False
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        changed = False
        for k in range(spec.K):
            br = best_response(spec, k, u)
            if br != u[k]:
                u[k] = br
                changed = True
        iterates.append(u.copy())
        if not changed:
            converged = True
            break
    return BRDTrace(iterates, converged, rounds, is_grid_ne(spec, u))


def decoupled_minima(spec):
    """Per-region minimum and argmin of the connection-blind cost over its grid."""
    values, argmins = [], []
    for k in range(spec.K):
        curve = decoupled_costs(spec, k)
        j = _argmin_low(curve)
        values.append(float(curve[j]))
        argmins.append(float(spec.actions.grids[k][j]))
    return np.array(values), np.array(argmins)


def _ratio(numerator, denominator, what):
    if not denominator > 0:
        raise DegenerateScenario(f"{what} denominator is {denominator}")
    return numerator / denominator


def _worst_ne_cost(spec, budget, workers):
    table = cost_table(spec, budget, workers)
    mask = ne_mask(table)
    if not mask.any():
        raise NoEquilibrium("no pure Nash equilibrium on the grid")
    return float(table.social[mask].max())


def poa(spec, budget=DEFAULT_BUDGET, workers=1):
    """Worst-equilibrium social cost over the optimal social cost."""
    worst = _worst_ne_cost(spec, budget, workers)
    return _ratio(worst, social_optimum(spec, budget, workers)[1], "PoA")


def poc(spec, budget=DEFAULT_BUDGET, workers=1):
    """Worst-equilibrium social cost over the sum of connection-blind minima."""
    worst = _worst_ne_cost(spec, budget, workers)
    return _ratio(worst, float(decoupled_minima(spec)[0].sum()), "PoC")


@dataclass(frozen=True)
class EquilibriumReport:
    ne_profiles: list
    ne_costs: list
    social_opt_profile: np.ndarray
    social_opt_cost: float
    poa: float
    poc: float
    decoupled_min_values: np.ndarray
    decoupled_argmins: np.ndarray
    profiles_evaluated: int

    @property
    def worst_ne_profile(self):
        return self.ne_profiles[int(np.argmax(self.ne_costs))]

    def as_dict(self):
        return {
            "ne_profiles": [p.tolist() for p in self.ne_profiles],
            "ne_costs": list(self.ne_costs),
            "social_opt_profile": self.social_opt_profile.tolist(),
            "social_opt_cost": self.social_opt_cost,
            "poa": self.poa,
            "poc": self.poc,
            "decoupled_min_values": self.decoupled_min_values.tolist(),
            "decoupled_argmins": self.decoupled_argmins.tolist(),
            "profiles_evaluated": self.profiles_evaluated,
        }


def solve(spec, budget=DEFAULT_BUDGET, workers=1):
    """Exhaustive grid analysis: equilibria, optimum, PoA and PoC."""
    table = cost_table(spec, budget, workers)
    mask = ne_mask(table)
    if not mask.any():
        raise NoEquilibrium("no pure Nash equilibrium on the grid")
    idx = np.argwhere(mask)
    profiles = [table.profile(i) for i in idx]
    ne_costs = [float(table.social[tuple(i)]) for i in idx]
    opt_u, opt_cost = social_optimum(spec, budget, workers)
    dec_vals, dec_args = decoupled_minima(spec)
    worst = max(ne_costs)
    return EquilibriumReport(
        ne_profiles=profiles,
        ne_costs=ne_costs,
        social_opt_profile=opt_u,
        social_opt_cost=opt_cost,
        poa=_ratio(worst, opt_cost, "PoA"),
        poc=_ratio(worst, float(dec_vals.sum()), "PoC"),
        decoupled_min_values=dec_vals,
        decoupled_argmins=dec_args,
        profiles_evaluated=int(np.prod(table.shape)),
    )
