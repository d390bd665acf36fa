"""Exact eavesdropper leakage and decoding error for small codes."""

# %%
import numpy as np

from secrecy_lab.channel import AuxiliaryStructure, BroadcastChannelSpec, ConditionalPmf, bsc, induced_distributions
from secrecy_lab.codebook import MartonConfig, generate_codebook, preselect_pairs
from secrecy_lab.secrecy import average_leakage, estimate_error_prob

# x = u1; both legitimate receivers noiseless, eavesdropper through BSC(0.25)
aux = AuxiliaryStructure.build(np.full((2, 2), 0.25), ConditionalPmf.from_function([0, 0, 1, 1], 2))
ch = BroadcastChannelSpec.from_components(np.eye(2), np.eye(2), bsc(0.25))
print(induced_distributions(aux, ch))

# %% randomization above I(U1;Z) hides m1 better than none
for rl1 in (0.0, 0.125, 0.25, 0.375):
    cfg = MartonConfig(8, 0.25, 0.5, rl1, 0.0, 1e9)
    rep = average_leakage(cfg, aux, ch, draws=40, seed=2)
    print(f"rl1={rl1:.3f}  I(M1;Z^n)/n = {rep.leakage_rate_1:.4f} +/- {rep.spread_1:.4f}")

# %% decoding error shrinks as the legitimate channel gets cleaner
cfg = MartonConfig(8, 0.25, 0.0, 0.0, 0.0, 1e9, seed=4)
cb = generate_codebook(cfg, aux)
sel = preselect_pairs(cb, 4)
for flip in (0.3, 0.2, 0.1, 0.0):
    noisy = BroadcastChannelSpec.from_components(bsc(flip), bsc(flip), bsc(0.25))
    rep = estimate_error_prob(cb, sel, noisy, trials=2000, seed=5, decoder="ml")
    print(f"flip {flip}: P_e,1 = {rep.p_err_1:.4f} +/- {rep.std_error_1:.4f}")
