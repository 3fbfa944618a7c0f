"""
Training the encoder/decoder pair
=================================

A short training run (the full default is 30k steps); prints the loss
trajectory and checks the learned codebook.
"""

import numpy as np

from walshae import autoencoder as ae
from walshae.fingerprint import fingerprint_interferer
from walshae.walsh import build_basis

STEPS = 4000

model, trace = ae.train(seed=1, tcfg=ae.TrainingConfig(steps=STEPS, seed=1))
for s in (0, 100, 1000, STEPS - 1):
    print(f"step {s:5d}  loss {trace[s]:.4f}")

cb = ae.codebook(model)
print("codebook power per channel use:", np.mean(cb**2))
print("minimum codeword distance:", round(ae.min_codeword_distance(model), 3))
print("noiseless decoding correct:", np.array_equal(ae.infer(model, cb), np.arange(16)))

# an interference-aware model sees the mask during training
mask = fingerprint_interferer(2475e6, build_basis(32), seed=0, num_blocks=5000)
aware, _ = ae.train(seed=1, tcfg=ae.TrainingConfig(steps=STEPS, seed=2, ici_db=6.0, mask=mask))
w = mask.weights
print("codeword energy on the 3 most interfered branches, baseline vs aware:",
      round(float(np.mean(cb[:, np.argsort(w)[-3:]] ** 2)), 3),
      round(float(np.mean(ae.codebook(aware)[:, np.argsort(w)[-3:]] ** 2)), 3))
