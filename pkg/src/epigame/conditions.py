"""Numerical checks of the sufficient conditions for pure equilibria.

Everything quantified "for all u" in the theory is checked on seeded probe
sets only. Positive margins are sampled evidence, never a proof.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .game import MONOTONE_TOL, detect_nonmonotone, own_cost_curve, probe_profiles
from .sir_core import final_state, integrate, integrate_final_batch

HESSIAN_STEP = 1e-3
# condition (iii) is tight by construction at the cross-rate threshold
MARGIN_TOL = 1e-12


def nu_beta(spec):
    """Per-receiver bound on cross transmission rates for the weak-interconnection regime.

    ``nu_k = (min(gamma) / ((1 - u_min_k) s0_k) - beta_kk) / 4``. Negative values
    mean the bound cannot be met for that region; they are returned as-is.
    """
    ep = spec.epidemic
    denom = (1.0 - spec.actions.u_min) * ep.s0
    if np.any(denom <= 0):
        raise ValueError("(1 - u_min) * s0 must be positive")
    nu = (ep.gamma.min() / denom - np.diag(ep.beta)) / 4.0
    if np.any(nu < 0):
        bad = np.flatnonzero(nu < 0).tolist()
        warnings.warn(f"cross-rate threshold is negative for regions {bad}", RuntimeWarning, stacklevel=2)
    return nu


def wir_flags(spec, nu=None):
    """``flags[k, l]`` is True when ``beta[k, l] <= nu_k`` (diagonal is always True)."""
    if nu is None:
        nu = nu_beta(spec)
    flags = spec.epidemic.beta <= nu[:, np.newaxis]
    np.fill_diagonal(flags, True)
    return flags


@dataclass(frozen=True)
class Assumption1Report:
    dominance_margin: float
    det_abs: float
    cond_i: bool
    min_susceptible: float
    cond_ii: bool
    static_margins: np.ndarray
    cond_iii_static: bool
    trajectory_margin: float
    cond_iii_trajectory: bool
    probes: list

    def as_dict(self):
        return {
            "i": {"ok": self.cond_i, "dominance_margin": self.dominance_margin, "det_abs": self.det_abs},
            "ii": {"ok": self.cond_ii, "min_susceptible": self.min_susceptible},
            "iii": {
                "static_ok": self.cond_iii_static,
                "static_margins": self.static_margins.tolist(),
                "trajectory_ok": self.cond_iii_trajectory,
                "trajectory_margin": self.trajectory_margin,
            },
            "probes": self.probes,
        }


def check_assumption1(spec, n_random=3, seed=0):
    """Non-singular transmission matrix, positive susceptibles, weak coupling along paths.

    Condition (iii) is reported twice: the static sufficient check
    ``(1 - u_min_k) s0_k <= 1 / sum_l rho[k, l]`` and the worst margin along
    stored trajectories at the probe profiles. Both pass at margins down to
    ``-MARGIN_TOL`` to absorb roundoff when cross rates sit exactly on the threshold.
    """
    ep = spec.epidemic
    beta = ep.beta
    diag = np.abs(np.diag(beta))
    off = np.abs(beta).sum(axis=1) - diag
    dominance = float(np.min(diag - off))
    det_abs = float(abs(np.linalg.det(beta)))

    with np.errstate(divide="ignore"):
        bound = 1.0 / ep.rho.sum(axis=1)
    static = bound - (1.0 - spec.actions.u_min) * ep.s0

    probes = probe_profiles(spec, n_random, seed)
    s_min = np.inf
    traj_margin = np.inf
    for p in probes:
        tr = integrate(ep, p, spec.T, spec.step)
        s_min = min(s_min, float(tr.s.min()))
        traj_margin = min(traj_margin, float(np.min(bound - (1.0 - p) * tr.s)))

    return Assumption1Report(
        dominance_margin=dominance,
        det_abs=det_abs,
        cond_i=dominance > 0,
        min_susceptible=s_min,
        cond_ii=s_min > 0,
        static_margins=static,
        cond_iii_static=bool(np.all(static >= -MARGIN_TOL)),
        trajectory_margin=traj_margin,
        cond_iii_trajectory=traj_margin >= -MARGIN_TOL,
        probes=[p.tolist() for p in probes],
    )


def check_theorem1(spec, regions=None):
    """Margins ``(1 - u_min_k) s_k(T, u_min) - 1 / (2 rho_kk)`` per region.

    ``regions`` defaults to the non-monotone players found by
    :func:`~epigame.game.detect_nonmonotone`. All margins >= 0 certify the
    regime, given the weak-coupling assumption.
    """
    if regions is None:
        regions = sorted(detect_nonmonotone(spec).nonmonotone)
    u = spec.actions.u_min
    s, _, _ = final_state(spec.epidemic, u, spec.T, spec.step)
    rho_kk = np.diag(spec.epidemic.rho)
    margins = {}
    for k in regions:
        if rho_kk[k] == 0:
            margins[k] = -np.inf
        else:
            margins[k] = float((1.0 - u[k]) * s[k] - 1.0 / (2.0 * rho_kk[k]))
    return margins


@dataclass(frozen=True)
class QuasiConvexity:
    quasiconvex: bool
    worst_violation: float
    worst_probe: list


def quasiconvex_violation(values):
    """Largest amount by which an interior point exceeds the best bracketing max.

    A sequence is quasi-convex (falls then rises) iff every ``v[j]`` is at most
    ``max(min(v[:j]), min(v[j+1:]))``.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0.0
    prefix = np.minimum.accumulate(v)[:-2]
    suffix = np.minimum.accumulate(v[::-1])[::-1][2:]
    return float(max(0.0, np.max(v[1:-1] - np.maximum(prefix, suffix))))


def quasiconvexity_scan(spec, k, n_random=0, seed=0, tol=MONOTONE_TOL):
    worst, where = 0.0, None
    for p in probe_profiles(spec, n_random, seed):
        viol = quasiconvex_violation(own_cost_curve(spec, k, p))
        if where is None or viol > worst:
            worst, where = viol, p.tolist()
    return QuasiConvexity(worst <= tol, worst, where)


@dataclass(frozen=True)
class Theorem2Report:
    min_margin: float
    margins: np.ndarray
    own_second: np.ndarray
    cross_abs_sum: np.ndarray
    probes: list
    skipped: list = field(default_factory=list)

    @property
    def supported(self):
        return self.min_margin > 0


def hessian_rows(spec, u, h=HESSIAN_STEP):
    """Finite-difference rows ``d2 J_k / du_k du_l`` for every ``k``; returns ``(K, K)``.

    Diagonal entries use the 3-point second difference, off-diagonal ones the
    4-point central mixed difference. All evaluations run in one batch.
    """
    K = spec.K
    u = np.asarray(u, dtype=float)
    pts = [u]
    eye = np.eye(K) * h
    for k in range(K):
        pts += [u + eye[k], u - eye[k]]
    pairs = [(k, l) for k in range(K) for l in range(K) if l != k]
    for k, l in pairs:
        pts += [u + eye[k] + eye[l], u + eye[k] - eye[l], u - eye[k] + eye[l], u - eye[k] - eye[l]]
    U = np.array(pts)
    s, _, _ = integrate_final_batch(spec.epidemic, U, spec.T, spec.step)
    J = spec.costs.socio(U) + spec.costs.c * (spec.epidemic.s0 - s)
    H = np.empty((K, K))
    for k in range(K):
        H[k, k] = (J[1 + 2 * k, k] - 2.0 * J[0, k] + J[2 + 2 * k, k]) / h**2
    base = 1 + 2 * K
    for n, (k, l) in enumerate(pairs):
        q = J[base + 4 * n : base + 4 * n + 4, k]
        H[k, l] = (q[0] - q[1] - q[2] + q[3]) / (4.0 * h**2)
    return H


def check_theorem2(spec, h=HESSIAN_STEP, n_probes=8, seed=0):
    """Sampled diagonal dominance of the own-action Hessian rows.

    Returns the minimum over probes and regions of
    ``d2J_k/du_k2 - sum_{l != k} |d2J_k/du_k du_l|``; positive supports a unique
    equilibrium reached by sequential best responses.
    """
    rng = np.random.default_rng(seed)
    lo, hi = spec.actions.u_min, spec.actions.u_max
    probes, skipped, margins, owns, crosses = [], [], [], [], []
    for _ in range(n_probes):
        u = np.array([g[rng.integers(len(g))] for g in spec.actions.grids])
        if np.any(hi - lo < 2 * h):
            skipped.append({"probe": u.tolist(), "reason": "action range narrower than 2h"})
            continue
        u = np.clip(u, lo + h, hi - h)
        H = hessian_rows(spec, u, h)
        own = np.diag(H).copy()
        cross = np.abs(H).sum(axis=1) - np.abs(own)
        probes.append(u.tolist())
        owns.append(own)
        crosses.append(cross)
        margins.append(own - cross)
    if not margins:
        return Theorem2Report(-np.inf, np.empty((0, spec.K)), np.empty((0, spec.K)), np.empty((0, spec.K)), [], skipped)
    margins = np.array(margins)
    return Theorem2Report(float(margins.min()), margins, np.array(owns), np.array(crosses), probes, skipped)


def analytic_di_du(spec, u, k):
    """``gamma_k (beta^-1)_kk ln(s_k(T)/s0_k) / (1 - u_k)**2``.

    The closed form holds the susceptible state fixed; it is a diagnostic to
    set beside a finite-difference estimate, not a substitute for one.
    """
    binv = np.linalg.inv(spec.epidemic.beta)
    u = np.asarray(u, dtype=float)
    s, _, _ = final_state(spec.epidemic, u, spec.T, spec.step)
    ep = spec.epidemic
    return float(ep.gamma[k] * binv[k, k] * np.log(s[k] / ep.s0[k]) / (1.0 - u[k]) ** 2)


@dataclass(frozen=True)
class ConditionReport:
    assumption1: Assumption1Report
    nu_beta: np.ndarray
    wir_ok: np.ndarray
    nonmonotone: list
    directions: dict
    theorem1_margins: dict
    quasiconvexity: dict
    theorem2: Theorem2Report

    @property
    def nu_unattainable(self):
        return (self.nu_beta < 0).tolist()

    @property
    def theorem1_certified(self):
        return all(m >= 0 for m in self.theorem1_margins.values())

    def as_dict(self):
        """JSON-ready summary; region indices are 1-based."""
        return {
            "assumption1": self.assumption1.as_dict(),
            "nu_beta": self.nu_beta.tolist(),
            "nu_unattainable": self.nu_unattainable,
            "wir_ok": self.wir_ok.tolist(),
            "nonmonotone_regions": [k + 1 for k in self.nonmonotone],
            "directions": {str(k + 1): d for k, d in self.directions.items()},
            "theorem1": {
                "margins": {str(k + 1): m for k, m in self.theorem1_margins.items()},
                "certified": self.theorem1_certified,
            },
            "quasiconvexity": {
                str(k + 1): {"ok": q.quasiconvex, "worst_violation": q.worst_violation, "worst_probe": q.worst_probe}
                for k, q in self.quasiconvexity.items()
            },
            "theorem2": {
                "min_margin": self.theorem2.min_margin,
                "supported": self.theorem2.supported,
                "probes": self.theorem2.probes,
                "skipped": self.theorem2.skipped,
            },
        }


def analyze(spec, n_random=3, seed=0, h=HESSIAN_STEP, n_probes=8):
    """Run every check and bundle the results."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        nu = nu_beta(spec)
    mono = detect_nonmonotone(spec, n_random, seed)
    nm = sorted(mono.nonmonotone)
    return ConditionReport(
        assumption1=check_assumption1(spec, n_random, seed),
        nu_beta=nu,
        wir_ok=wir_flags(spec, nu),
        nonmonotone=nm,
        directions={k: mono.direction(k) for k in range(spec.K)},
        theorem1_margins=check_theorem1(spec, nm),
        quasiconvexity={k: quasiconvexity_scan(spec, k, n_random, seed) for k in range(spec.K)},
        theorem2=check_theorem2(spec, h, n_probes, seed),
    )
