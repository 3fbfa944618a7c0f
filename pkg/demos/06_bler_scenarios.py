"""
BLER for the three scenario families
====================================

Baseline, interference-unaware and interference-aware curves at 6 dB ICI.
Uses short training runs so it finishes in about a minute; the figures
reproduced by ``walshae reproduce-figure`` use full-length training.
"""

from dataclasses import replace

from walshae import evaluation as ev
from walshae.autoencoder import TrainingConfig
from walshae.experiments import Lab

lab = Lab(training=replace(TrainingConfig(), steps=5000), seed=1)
grid = [4.0, 6.0, 8.0]
fc = 2475e6

scenarios = [
    lab.baseline_scenario(grid=grid),
    lab.unaware_scenario(fc, 6.0, grid=grid),
    lab.aware_scenario(fc, 6.0, grid=grid),
]
for sc in scenarios:
    pts = ev.bler_curve(sc, grid, seed=0, min_errors=100, max_blocks=2_000_000)
    print(f"{sc.name:28s}", "  ".join(f"{p.ebn0_db:.0f} dB: {p.bler:.2e}" for p in pts))

print("\nclosed-form CI for 7 errors in 1e5 blocks:", ev.clopper_pearson(7, 100_000))
