"""Cross-rate sweeps: PoA and PoC as one region's incoming rates vary."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import equilibrium
from .conditions import nu_beta
from .scenario import fill_cross_rates

CSV_HEADER = (
    "varied_region",
    "cross_rate",
    "poa",
    "poc",
    "worst_ne_profile",
    "social_opt_profile",
    "in_wir_flag",
    "ne_count",
    "note",
)


@dataclass(frozen=True)
class SweepRow:
    varied_region: int  # 0-based
    cross_rate: float
    poa: float
    poc: float
    worst_ne_profile: tuple
    social_opt_profile: tuple
    in_wir_flag: bool
    ne_count: int
    note: str = ""


def base_matrix(spec, plan):
    """Transmission matrix before the varied row is overwritten."""
    bdiag = np.diag(spec.epidemic.beta)
    if isinstance(plan.base, str):
        return fill_cross_rates(bdiag, nu_beta(spec))
    beta = np.array(plan.base, dtype=float)
    np.fill_diagonal(beta, bdiag)
    return beta


def row_spec(spec, base, k, rate):
    beta = base.copy()
    diag = beta[k, k]
    beta[k, :] = rate
    beta[k, k] = diag
    return spec.with_beta(beta)


def _run_row(args):
    spec, base, nu_k, k, rate, budget, threads = args
    in_wir = bool(rate <= nu_k)
    try:
        rep = equilibrium.solve(row_spec(spec, base, k, rate), budget=budget, workers=threads)
    except (equilibrium.NoEquilibrium, equilibrium.DegenerateScenario, ArithmeticError, ValueError, RuntimeError) as exc:
        return SweepRow(k, rate, math.nan, math.nan, (), (), in_wir, 0, f"{type(exc).__name__}: {exc}")
    finally:
        equilibrium.clear_tables()
    return SweepRow(
        k,
        rate,
        rep.poa,
        rep.poc,
        tuple(rep.worst_ne_profile.tolist()),
        tuple(rep.social_opt_profile.tolist()),
        in_wir,
        len(rep.ne_profiles),
    )


def run_sweep(spec, plan, workers=1, budget=equilibrium.DEFAULT_BUDGET):
    """Solve every (varied region, rate) pair; rows come back in plan order.

    With ``workers > 1`` rows run in separate processes.
    """
    nu = nu_beta(spec)
    base = base_matrix(spec, plan)
    tasks = [(spec, base, nu[k], k, float(v), budget, 1) for k in plan.varied_regions for v in plan.rates]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_row, tasks))
    return [_run_row(t) for t in tasks]
