"""Scenario files and the built-in five-region scenario.

A scenario is a JSON object::

    {
      "epidemic": {"K": 5, "beta": [[...], ...], "gamma": [...], "s0": [...], "i0": [...]},
      "costs":    {"a": [...], "b": [...], "c": [...]},
      "actions":  {"u_min": [...], "u_max": [...], "n_points": 11},
      "horizon":  {"T_days": 30, "step_days": 0.05},
      "sweep":    {"varied_region": [1, 2], "cross_rate_values": [0, 0.001],
                   "fixed_cross_rate_mode": "nu_beta"}
    }

``beta`` row ``k`` holds the rates incoming to region ``k``. Region numbers in
files are 1-based; the Python API is 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import ActionGrid, CostParams, GameSpec
from .sir_core import DEFAULT_STEP, EpidemicParams


class ScenarioError(ValueError):
    """Invalid scenario content; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SweepPlan:
    varied_regions: tuple
    rates: tuple
    base: object = "nu_beta"  # "nu_beta" or a K x K matrix of fixed cross rates

    def as_dict(self):
        base = self.base if isinstance(self.base, str) else np.asarray(self.base).tolist()
        return {
            "varied_region": [k + 1 for k in self.varied_regions],
            "cross_rate_values": list(self.rates),
            "fixed_cross_rate_mode": base,
        }


TABLE1 = {
    "gamma": [0.15] * 5,
    "beta_diag_over_gamma": [3.0, 2.0, 1.5, 1.2, 1.0],
    "s0": [0.8, 0.9, 0.9, 0.9, 0.9],
    "i0": [0.2, 0.1, 0.005, 0.002, 0.001],
    "a": [2.0, 0.5, 5.0, 2.0, 3.0],
    "b": [0.0, 0.0, 2.0, 5.0, 5.0],
    "c": [0.0, 0.0, 50.0, 70.0, 70.0],
    "u_min": [0.6, 0.51, 0.35, 0.2, 0.1],
    "u_max": [0.9] * 5,
    "T": 30.0,
}
SWEEP_RATES = tuple(round(1e-3 * j, 12) for j in range(13))


def nu_threshold(beta_diag, gamma, s0, u_min):
    """Same arithmetic as ``conditions.nu_beta``, usable before a GameSpec exists."""
    return (np.min(gamma) / ((1.0 - np.asarray(u_min)) * np.asarray(s0)) - np.asarray(beta_diag)) / 4.0


def fill_cross_rates(beta_diag, rates):
    """Matrix with ``beta_diag`` on the diagonal and ``rates[k]`` across row ``k``."""
    K = len(beta_diag)
    beta = np.repeat(np.asarray(rates, dtype=float)[:, np.newaxis], K, axis=1)
    np.fill_diagonal(beta, beta_diag)
    return beta


def table1(cross="nu_beta", n_points=11, step=DEFAULT_STEP):
    """The five-region scenario.

    ``cross`` is ``"nu_beta"`` (every incoming cross rate of region ``k`` at its
    threshold), ``"zero"`` (decoupled), or a scalar rate applied everywhere.
    """
    t = TABLE1
    gamma = np.array(t["gamma"])
    bdiag = np.array(t["beta_diag_over_gamma"]) * gamma
    if isinstance(cross, str) and cross == "nu_beta":
        rates = nu_threshold(bdiag, gamma, t["s0"], t["u_min"])
    elif isinstance(cross, str) and cross == "zero":
        rates = np.zeros(5)
    else:
        rates = np.full(5, float(cross))
    epi = EpidemicParams(fill_cross_rates(bdiag, rates), gamma, t["s0"], t["i0"])
    return GameSpec(
        epi,
        CostParams(t["a"], t["b"], t["c"]),
        ActionGrid(t["u_min"], t["u_max"], n_points),
        T=t["T"],
        step=step,
    )


BUILTINS = {
    "table1": lambda **kw: (table1("nu_beta", **kw), SweepPlan(tuple(range(5)), SWEEP_RATES)),
    "table1-decoupled": lambda **kw: (table1("zero", **kw), None),
}


def builtin(name, n_points=11, step=DEFAULT_STEP):
    if name not in BUILTINS:
        raise ScenarioError("builtin", f"unknown scenario {name!r}; choose from {sorted(BUILTINS)}")
    return BUILTINS[name](n_points=n_points, step=step)


def _section(doc, name):
    if name not in doc or not isinstance(doc[name], dict):
        raise ScenarioError(name, "missing section")
    return doc[name]


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _vector(section, key, prefix, K):
    path = f"{prefix}.{key}"
    if key not in section:
        raise ScenarioError(path, "missing field")
    raw = section[key]
    if not isinstance(raw, list):
        raise ScenarioError(path, "expected a list")
    if len(raw) != K:
        raise ScenarioError(path, f"length {len(raw)} does not match K={K}")
    return np.array([_number(x, f"{path}[{j}]") for j, x in enumerate(raw)])


def _matrix(raw, path, K):
    if not isinstance(raw, list) or len(raw) != K:
        raise ScenarioError(path, f"expected {K} rows")
    rows = []
    for j, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != K:
            raise ScenarioError(f"{path}[{j}]", f"expected {K} entries")
        rows.append([_number(x, f"{path}[{j}][{m}]") for m, x in enumerate(row)])
    return np.array(rows)


def _require(cond, path, message):
    if not cond:
        raise ScenarioError(path, message)


def parse_scenario(doc):
    """Validate a scenario mapping and return ``(GameSpec, SweepPlan | None)``."""
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "expected an object")
    ep = _section(doc, "epidemic")
    K = ep.get("K")
    _require(isinstance(K, int) and not isinstance(K, bool) and K >= 1, "epidemic.K", "expected a positive integer")
    beta = _matrix(ep.get("beta"), "epidemic.beta", K)
    for (j, m), x in np.ndenumerate(beta):
        _require(x >= 0, f"epidemic.beta[{j}][{m}]", "must be nonnegative")
    gamma = _vector(ep, "gamma", "epidemic", K)
    s0 = _vector(ep, "s0", "epidemic", K)
    i0 = _vector(ep, "i0", "epidemic", K)
    for j in range(K):
        _require(gamma[j] > 0, f"epidemic.gamma[{j}]", "must be positive")
        _require(s0[j] > 0, f"epidemic.s0[{j}]", "must be positive")
        _require(i0[j] >= 0, f"epidemic.i0[{j}]", "must be nonnegative")
        _require(s0[j] + i0[j] <= 1, f"epidemic.i0[{j}]", "s0 + i0 must not exceed 1")

    co = _section(doc, "costs")
    weights = {}
    for name in ("a", "b", "c"):
        weights[name] = _vector(co, name, "costs", K)
        for j, x in enumerate(weights[name]):
            _require(x >= 0, f"costs.{name}[{j}]", "must be nonnegative")

    ac = _section(doc, "actions")
    u_min = _vector(ac, "u_min", "actions", K)
    u_max = _vector(ac, "u_max", "actions", K)
    for j in range(K):
        _require(0 <= u_min[j] < 1, f"actions.u_min[{j}]", "must lie in [0, 1)")
        _require(0 <= u_max[j] < 1, f"actions.u_max[{j}]", "must lie in [0, 1)")
        _require(u_min[j] <= u_max[j], f"actions.u_max[{j}]", "must be >= u_min")
    n_points = ac.get("n_points", 11)
    _require(isinstance(n_points, int) and not isinstance(n_points, bool) and n_points >= 2, "actions.n_points", "expected an integer >= 2")

    hz = _section(doc, "horizon")
    T = _number(hz.get("T_days"), "horizon.T_days")
    step = _number(hz.get("step_days", DEFAULT_STEP), "horizon.step_days")
    _require(T > 0, "horizon.T_days", "must be positive")
    _require(0 < step <= T, "horizon.step_days", "must satisfy 0 < step <= T")

    spec = GameSpec(
        EpidemicParams(beta, gamma, s0, i0),
        CostParams(weights["a"], weights["b"], weights["c"]),
        ActionGrid(u_min, u_max, n_points),
        T=T,
        step=step,
    )
    plan = None
    if "sweep" in doc:
        plan = _parse_sweep(doc["sweep"], K)
    return spec, plan


def _parse_sweep(sw, K):
    _require(isinstance(sw, dict), "sweep", "expected an object")
    varied = sw.get("varied_region", list(range(1, K + 1)))
    if isinstance(varied, int) and not isinstance(varied, bool):
        varied = [varied]
    _require(isinstance(varied, list) and varied, "sweep.varied_region", "expected a region number or list")
    for j, v in enumerate(varied):
        _require(isinstance(v, int) and 1 <= v <= K, f"sweep.varied_region[{j}]", f"expected 1..{K}")
    rates = sw.get("cross_rate_values", list(SWEEP_RATES))
    _require(isinstance(rates, list) and rates, "sweep.cross_rate_values", "expected a non-empty list")
    rates = [_number(x, f"sweep.cross_rate_values[{j}]") for j, x in enumerate(rates)]
    for j, x in enumerate(rates):
        _require(x >= 0, f"sweep.cross_rate_values[{j}]", "must be nonnegative")
    mode = sw.get("fixed_cross_rate_mode", "nu_beta")
    if isinstance(mode, str):
        _require(mode == "nu_beta", "sweep.fixed_cross_rate_mode", "expected 'nu_beta' or a matrix")
        base = mode
    else:
        base = _matrix(mode, "sweep.fixed_cross_rate_mode", K)
    return SweepPlan(tuple(v - 1 for v in varied), tuple(rates), base)


def load_scenario(path):
    """Read and validate a scenario file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"parse error: {exc}") from exc
    return parse_scenario(doc)


def scenario_dict(spec, plan=None):
    ep, co, ac = spec.epidemic, spec.costs, spec.actions
    doc = {
        "epidemic": {
            "K": spec.K,
            "beta": ep.beta.tolist(),
            "gamma": ep.gamma.tolist(),
            "s0": ep.s0.tolist(),
            "i0": ep.i0.tolist(),
        },
        "costs": {"a": co.a.tolist(), "b": co.b.tolist(), "c": co.c.tolist()},
        "actions": {"u_min": ac.u_min.tolist(), "u_max": ac.u_max.tolist(), "n_points": ac.n_points},
        "horizon": {"T_days": float(spec.T), "step_days": float(spec.step)},
    }
    if plan is not None:
        doc["sweep"] = plan.as_dict()
    return doc


def save_scenario(path, spec, plan=None):
    Path(path).write_text(json.dumps(scenario_dict(spec, plan), indent=2) + "\n")
