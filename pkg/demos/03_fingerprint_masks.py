"""
Walsh-domain fingerprints of the interferer
===========================================

Extracts interference masks at a few centre frequencies and scores how
strongly each concentrates into a handful of Walsh branches.
"""

import numpy as np

from walshae.fingerprint import fingerprint_interferer, sweep_frequencies
from walshae.ofdm import OfdmConfig
from walshae.walsh import build_basis

basis = build_basis(32)
freqs = [2475e6, 2375e6, 2075e6, 1250e6, 1650e6]

print("fc [MHz]  mad_from_peak  peak branch  peak power share")
for r in sweep_frequencies(OfdmConfig(), freqs, basis, seed=1, num_blocks=10_000):
    share = r.per_branch_power.max() / r.per_branch_power.sum()
    print(f"{r.center_frequency / 1e6:8.0f}  {r.mad_from_peak:13.4f}  {r.peak_branch_index:11d}  {share:16.3f}")

print("\nsub-multiples of 5 GHz:")
subs = sweep_frequencies(OfdmConfig(), [2475e6, 1250e6, 625e6, 312.5e6], basis, seed=1)
vals = np.array([r.mad_from_peak for r in subs])
print("mad:", np.round(vals, 4), " mean step:", f"{np.mean(np.diff(vals) / vals[:-1]) * 100:.2f}%")

mask = fingerprint_interferer(2475e6, basis, seed=3)
print("\nmask at 2475 MHz (RMS 1):", np.round(mask.weights, 2))
