"""
A CP-OFDM interferer at the 5 GS/s system rate
==============================================

Generates the 1024-point, 792-subcarrier, 64-QAM waveform, moves it to a
centre frequency and checks where its power ends up.
"""

import numpy as np
from scipy import signal

from walshae.ofdm import OfdmConfig, generate_baseband, interferer_capture, qam_constellation

cfg = OfdmConfig(num_symbols=8)
print(f"symbol: {cfg.samples_per_symbol} samples = {cfg.samples_per_symbol / cfg.native_sample_rate * 1e6:.2f} us")
print(f"occupied bandwidth: {cfg.occupied_bandwidth / 1e6:.2f} MHz")

pts = qam_constellation(64)
print("64-QAM mean energy:", np.mean(np.abs(pts) ** 2))

bb = generate_baseband(cfg, seed=1)
sym = bb.reshape(cfg.num_symbols, -1)
print("cyclic prefix repeats the symbol tail:", np.array_equal(sym[:, :256], sym[:, -256:]))

for fc in (2475e6, 1250e6):
    cap = interferer_capture(fc, cfg, seed=1)
    f, p = signal.welch(cap.samples, fs=cap.sample_rate, nperseg=1 << 14)
    band = np.abs(f - fc) <= 31e6
    print(f"fc={fc / 1e6:.0f} MHz: {len(cap)} real samples, "
          f"{100 * p[band].sum() / p.sum():.3f}% of power within +-31 MHz")
