"""Balls into bins: how many of t bins are hit by s uniform balls."""

# %%
import numpy as np

from secrecy_lab.ballbins import (
    OccupancyParams,
    distinct_pmf,
    expected_distinct,
    occupancy_fraction_trend,
    simulate_distinct,
    variance_distinct,
)

# %% closed forms next to a simulation
for t, s in [(2, 2), (16, 64), (256, 256), (100, 20)]:
    sim = simulate_distinct(OccupancyParams(t, s), trials=20000, seed=1)
    print(f"t={t:4d} s={s:4d}  mean {expected_distinct(t, s):9.4f} (sim {sim.mean:9.4f})"
          f"  var {variance_distinct(t, s):8.4f} (sim {sim.variance:8.4f})")

# %% the full law for a small case
law = distinct_pmf(4, 3)
print("P(K=k), t=4 s=3:", np.round(law, 4))

# %% fraction of bins hit as the block length grows
# more balls than bins -> fraction goes to 1; fewer -> to 0; equal -> 1 - 1/e
for rl, r in [(0.3, 0.5), (0.5, 0.3), (0.5, 0.5)]:
    trend = occupancy_fraction_trend(rl, r, [10, 20, 30])
    print(f"rl={rl} r={r}:", [(n, round(f, 4)) for n, f in trend])
