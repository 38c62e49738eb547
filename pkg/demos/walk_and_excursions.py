"""
Exploration walk against the drifted Brownian motion
====================================================

One breadth-first exploration at criticality, rescaled in time by n^(2/3)
and in space by n^(1/3), next to the top excursions of W(s) - s^2/2.
"""

import numpy as np

from ctlab.exploration import component_sizes, explore_fast, rescale_walk, steps_for_horizon
from ctlab.graph import GraphParams
from ctlab.limit import excursion_lengths, sample_drifted_bm

N, T = 120, 6.0
params = GraphParams.at_criticality(N)
n = params.n
trace = explore_fast(params, steps_for_horizon(T, n), seed=11)

for s, v in rescale_walk(trace, n, [0.5, 1, 2, 4, 6]):
    print(f"s={s:3.1f}  z~={v:+.3f}  (drift alone {-s * s / 2:+.3f})")

# %%
# Largest completed components, in units of n^(2/3).

comp = component_sizes(trace)
print("C_i / n^(2/3):", np.round(comp.sizes[:3] / n ** (2 / 3), 3))

# %%
# A limit path on the same horizon.

path = sample_drifted_bm(T, 1e-4, np.random.default_rng(11))
ex = excursion_lengths(path)
print("gamma_i:", np.round(ex.lengths[:3], 3), " open tail:", round(ex.truncated, 3))
