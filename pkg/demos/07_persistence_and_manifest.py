"""
Saving artifacts and checking a run manifest
============================================

Models and masks are stored as text that round-trips every double exactly;
a manifest records a hash for each file.
"""

import tempfile
from pathlib import Path

import numpy as np

from walshae import autoencoder as ae
from walshae import persist
from walshae.fingerprint import fingerprint_interferer
from walshae.walsh import build_basis

out = Path(tempfile.mkdtemp(prefix="walshae-demo-"))
model = ae.init_model(5)
mask = fingerprint_interferer(1250e6, build_basis(32), seed=0, num_blocks=2000)
persist.save_model(model, out / "model.txt")
persist.save_mask(mask, out / "mask.txt")

back = persist.load_model(out / "model.txt")
print("model bit-exact:", all(np.array_equal(getattr(back, k), getattr(model, k)) for k in ae.PARAM_NAMES))
print("mask bit-exact: ", np.array_equal(persist.load_mask(out / "mask.txt").weights, mask.weights))

persist.write_manifest(out / "manifest.json", {"demo": True}, [out / "model.txt", out / "mask.txt"])
persist.verify_manifest(out / "manifest.json")
print("manifest verified in", out)

(out / "mask.txt").write_text((out / "mask.txt").read_text().replace("N: 32", "N: 31"))
try:
    persist.load_mask(out / "mask.txt")
except persist.LoadError as e:
    print("tampered file rejected:", e)
