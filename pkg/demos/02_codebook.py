"""Marton codebook, pair preselection and the distinct-sequence count."""

# %%
import numpy as np

from secrecy_lab.channel import AuxiliaryStructure, ConditionalPmf
from secrecy_lab.codebook import (
    MartonConfig,
    count_distinct,
    encode,
    generate_codebook,
    lemma1_uniformity_test,
    preselect_pairs,
    theorem1_experiment,
)

# correlated pair (crossover 1/4), channel input is u1 xor u2
aux = AuxiliaryStructure.build([[0.375, 0.125], [0.125, 0.375]], ConditionalPmf.from_function([0, 1, 1, 0], 2))

# %% one codebook and its preselection table
cfg = MartonConfig(n=8, r1=0.25, r2=0.25, rl1=0.25, rl2=0.25, eps_pair=0.6, seed=3)
cb = generate_codebook(cfg, aux)
sel = preselect_pairs(cb, rng_seed=3)
print(f"M1={cfg.m1} M2={cfg.m2} L1={cfg.l1} L2={cfg.l2}; failures: {sel.failure_count}")
m1, m2 = np.argwhere(~sel.failures)[0]
print("x for", (int(m1), int(m2)), "=", encode(cb, sel, m1, m2))

# %% the selected cell is uniform over the product subcodebook
res = lemma1_uniformity_test(MartonConfig(8, 0, 0, 0.125, 0.125, 0.5), aux, draws=50000, seed=1)
print("uniform rule:", res.cell_counts, f"p={res.p_value:.3f}")
res = lemma1_uniformity_test(MartonConfig(8, 0, 0, 0.125, 0.125, 0.5), aux, draws=50000, seed=1, rule="first")
print("first-hit rule:", res.cell_counts, f"p={res.p_value:.2g}")

# %% distinct u1 sequences used per subcodebook against the occupancy prediction
rep = count_distinct(sel, cb)
print("distinct per m1:", rep.counts_1)
for rates, label in [((0.4, 0.4, 0.2, 0.2), "R2 > Rl1"), ((0.3, 0.3, 0.5, 0.5), "R2 < Rl1")]:
    rows = theorem1_experiment(aux, rates, [4, 8, 12], draws=10, seed=0)
    print(label, [(r.n, round(r.mean_fraction, 3), round(r.predicted_fraction, 3)) for r in rows])
