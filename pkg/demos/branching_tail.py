"""
Tail of the maximal generation
==============================

The offspring law of the dominating branching process is a sum of ring
binomials.  K * P(max generation > K) creeps up towards 1.
"""

from ctlab.branching import OffspringLaw, max_tail_estimate
from ctlab.graph import C_CRIT

law = OffspringLaw(10_000, C_CRIT)
print(f"mean {law.mean:.6f}  variance {law.variance:.6f}")

for K in (5, 10, 20, 50):
    e = max_tail_estimate(law, K, 200_000, seed=1)
    print(f"K={K:3d}  K*P = {e.value:.3f}  [{e.ci_low:.3f}, {e.ci_high:.3f}]")
