"""
Sufficient conditions for a pure equilibrium
============================================

Cross-rate thresholds, the non-monotone players, the quasi-convexity scan
and the sampled Hessian dominance test. Every "for all u" statement is only
checked on seeded probes.
"""

import json
from dataclasses import replace

from epigame.conditions import analyze, check_theorem2
from epigame.game import CostParams
from epigame.scenario import table1

spec = table1("nu_beta")
report = analyze(spec, n_random=3, seed=0)
d = report.as_dict()
print("cross-rate thresholds:", [round(x, 6) for x in d["nu_beta"]])
print("non-monotone regions:", d["nonmonotone_regions"])
print("interior-regime margins:", json.dumps(d["theorem1"]["margins"]))

# regions 1 and 2 have linear costs, so the own second derivative is zero
print("Hessian dominance margin:", d["theorem2"]["min_margin"])

# giving them a quadratic term makes the dominance test informative
convex = replace(spec, costs=CostParams([2, 0.5, 5, 2, 3], [4, 4, 2, 5, 5], [0, 0, 50, 70, 70]))
print("with quadratic terms:", round(check_theorem2(convex).min_margin, 3))
