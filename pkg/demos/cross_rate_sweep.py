"""
How connectedness drives the efficiency ratios
==============================================

Vary the incoming cross rates of one region while the others stay at their
thresholds. A 6-point grid keeps this to a few seconds.
"""

from epigame.scenario import SweepPlan, table1
from epigame.sweep import run_sweep

spec = table1("nu_beta", n_points=6)
plan = SweepPlan(varied_regions=(2,), rates=(0.0, 0.002, 0.004, 0.008, 0.012))

print("rate     PoA     PoC    inside threshold")
for row in run_sweep(spec, plan):
    print(f"{row.cross_rate:<8} {row.poa:.3f}   {row.poc:.3f}  {row.in_wir_flag}")
