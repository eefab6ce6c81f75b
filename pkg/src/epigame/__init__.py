"""Static game over a networked SIR epidemic.

Regions pick constant social-distancing levels that trade socio-economic
losses against the epidemic's final size. The package integrates the coupled
dynamics, finds grid Nash equilibria and the social optimum, computes the
price of anarchy and the price of connectedness, and checks numerically the
sufficient conditions for equilibrium existence and uniqueness.
"""

from .conditions import analyze, check_assumption1, check_theorem1, check_theorem2, nu_beta
from .equilibrium import enumerate_ne, poa, poc, sequential_brd, social_optimum, solve
from .game import ActionGrid, CostParams, GameSpec, cost, decoupled_cost, detect_nonmonotone, social_cost
from .scenario import load_scenario, table1
from .sir_core import EpidemicParams, Trajectory, final_state, integrate

__version__ = "0.1.0"

__all__ = [
    "ActionGrid",
    "CostParams",
    "EpidemicParams",
    "GameSpec",
    "Trajectory",
    "analyze",
    "check_assumption1",
    "check_theorem1",
    "check_theorem2",
    "cost",
    "decoupled_cost",
    "detect_nonmonotone",
    "enumerate_ne",
    "final_state",
    "integrate",
    "load_scenario",
    "nu_beta",
    "poa",
    "poc",
    "sequential_brd",
    "social_cost",
    "social_optimum",
    "solve",
    "table1",
]
