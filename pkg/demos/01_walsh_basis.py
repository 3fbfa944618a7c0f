"""
Walsh basis and the fast transform
==================================

Builds the sequency-ordered basis, checks that it is its own inverse and
compares the dense product with the butterfly transform.
"""

import numpy as np

from walshae.walsh import build_basis, fast_transform, forward, sign_changes

B = build_basis(8)
print("N=8 basis, entries scaled by sqrt(8):")
print((B.entries * np.sqrt(8)).astype(int))
print("sign changes per row:", [sign_changes(B.row(i)) for i in range(8)])

# a constant block lands in branch 0, an alternating one in the last branch
b32 = build_basis(32)
print("DC block     ->", np.round(forward(b32, np.ones(32))[:3], 3), "...")
print("alternating  -> peak branch", int(np.argmax(np.abs(forward(b32, np.tile([1, -1], 16))))))

x = np.random.default_rng(0).standard_normal((10_000, 32))
X = fast_transform(32, x)
print("fast vs dense max deviation:", np.max(np.abs(X - x @ b32.entries.T)))
print("applying twice recovers x:   ", np.max(np.abs(fast_transform(32, X) - x)))
print("energy preserved:            ", np.allclose((x**2).sum(1), (X**2).sum(1)))
