"""
Equilibria, optimum and the two efficiency ratios
=================================================

Exhaustive search over the 11-point grid (161,051 profiles, one ODE solve
each), then sequential best responses from the weakest profile.
"""

import numpy as np

from epigame.equilibrium import sequential_brd, solve
from epigame.scenario import table1

spec = table1("nu_beta")
rep = solve(spec)

print("equilibria:", [np.round(p, 3).tolist() for p in rep.ne_profiles])
print("social optimum:", np.round(rep.social_opt_profile, 3).tolist(), f"cost {rep.social_opt_cost:.4f}")
print("connection-blind argmins:", rep.decoupled_argmins.tolist())
print(f"PoA = {rep.poa:.4f}   PoC = {rep.poc:.4f}")

# regions update in turn until nobody moves
trace = sequential_brd(spec, spec.actions.u_min)
print(f"BRD: {trace.rounds} rounds, converged={trace.converged}, final={np.round(trace.final, 3).tolist()}")

# without cross transmission both ratios collapse to one
flat = solve(table1("zero"))
print(f"decoupled: PoA = {flat.poa:.6f}   PoC = {flat.poc:.6f}")
