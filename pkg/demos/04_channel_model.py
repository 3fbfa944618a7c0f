"""
AWGN plus shaped interference
=============================

The channel adds white noise at the Eb/N0-derived variance and, when an ICI
level is set, Gaussian interference shaped by a mask.
"""

import numpy as np

from walshae.channel import ChannelConfig, apply, noise_variance
from walshae.fingerprint import InterferenceMask, fingerprint_interferer
from walshae.walsh import build_basis

print("N0 at 8 dB, rate 4/32:", round(noise_variance(ChannelConfig(8.0)), 4))

mask = fingerprint_interferer(2475e6, build_basis(32), seed=0, num_blocks=5000)
cfg = ChannelConfig(8.0, ici_db=6.0, mask=mask)
r = apply(cfg, np.zeros((200_000, 32)), np.random.default_rng(1))
p = np.mean(r.interference_draw**2, axis=0)
n0 = noise_variance(cfg)
print(f"interference / noise power, averaged over branches: {p.mean() / n0:.3f} (10^0.6 = {10**0.6:.3f})")
print("strongest branches:", np.argsort(p)[::-1][:3], "share", round(p.max() / p.sum(), 3))

flat = apply(ChannelConfig(8.0, 6.0, InterferenceMask.uniform(32)), np.zeros((200_000, 32)), 2)
print("uniform mask, per-branch spread:", np.ptp(np.var(flat.interference_draw, axis=0)) / n0)
