"""Sequency-ordered Walsh bases and forward/inverse Walsh transforms.

The basis is scaled by ``1/sqrt(N)`` so that it is orthonormal, symmetric and
its own inverse. A block of samples ``x`` maps to Walsh coefficients
``X = x @ B``; applying the same product again recovers ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Ordering(str, Enum):
    SEQUENCY = "sequency"
    NATURAL = "natural-hadamard"


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


def _check_order(order: int) -> None:
    if not is_power_of_two(order) or order < 2:
        raise ValueError(f"Walsh order must be a power of two >= 2, got {order!r}")


def sequency_permutation(order: int) -> np.ndarray:
    """Row indices of the natural Hadamard matrix, listed by ascending sequency.

    Entry ``s`` is the natural-order row with exactly ``s`` sign changes:
    reverse the bits of ``s``'s Gray code.
    """
    _check_order(order)
    nbits = order.bit_length() - 1
    seq = np.arange(order)
    gray = seq ^ (seq >> 1)
    rev = np.zeros_like(gray)
    for b in range(nbits):
        rev |= ((gray >> b) & 1) << (nbits - 1 - b)
    return rev


def _natural_hadamard(order: int) -> np.ndarray:
    h = np.array([[1.0]])
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


@dataclass(frozen=True)
class WalshBasis:
    """Orthonormal N x N Walsh matrix (entries are +-1/sqrt(N))."""

    order: int
    entries: np.ndarray
    ordering: Ordering = Ordering.SEQUENCY

    def __post_init__(self):
        self.entries.setflags(write=False)

    def row(self, i: int) -> np.ndarray:
        """Sampled Walsh function ``W_i``."""
        return self.entries[i]


def build_basis(order: int, ordering: Ordering | str = Ordering.SEQUENCY) -> WalshBasis:
    """Build a Walsh basis of the given power-of-two order.

    Parameters
    ----------
    order : int
        Number of branches N, a power of two >= 2.
    ordering : Ordering or str
        ``"sequency"`` (default) sorts rows by number of sign changes;
        ``"natural-hadamard"`` keeps the Sylvester construction order.
    """
    _check_order(order)
    ordering = Ordering(ordering)
    h = _natural_hadamard(order)
    if ordering is Ordering.SEQUENCY:
        h = h[sequency_permutation(order)]
    return WalshBasis(order, h / np.sqrt(order), ordering)


def sign_changes(row: np.ndarray) -> int:
    s = np.sign(row)
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _check_length(basis: WalshBasis, x: np.ndarray) -> None:
    if x.shape[-1] != basis.order:
        raise ValueError(
            f"dimension mismatch: block length {x.shape[-1]} != basis order {basis.order}"
        )


def forward(basis: WalshBasis, block) -> np.ndarray:
    """Project time-domain samples onto the Walsh basis.

    Accepts a single block of length N or a stack of blocks with shape
    ``(..., N)``.
    """
    x = np.asarray(block, dtype=float)
    _check_length(basis, x)
    return x @ basis.entries


def inverse(basis: WalshBasis, coeffs) -> np.ndarray:
    """Recombine Walsh branches into time-domain samples.

    Same product as :func:`forward`, since the orthonormal basis is an
    involution.
    """
    return forward(basis, coeffs)


def fast_transform(order: int, block, ordering: Ordering | str = Ordering.SEQUENCY) -> np.ndarray:
    """O(N log N) butterfly Walsh transform, equal to ``forward`` with the same basis.

    Works on the last axis, so a ``(num_blocks, N)`` array is transformed
    block by block without materialising the N x N matrix.
    """
    _check_order(order)
    x = np.array(block, dtype=float)
    if x.shape[-1] != order:
        raise ValueError(f"dimension mismatch: block length {x.shape[-1]} != order {order}")
    lead = x.shape[:-1]
    h = 1
    while h < order:
        x = x.reshape(*lead, order // (2 * h), 2, h)
        a = x[..., 0, :]
        b = x[..., 1, :]
        x = np.stack((a + b, a - b), axis=-2)
        h *= 2
    x = x.reshape(*lead, order) / np.sqrt(order)
    if Ordering(ordering) is Ordering.SEQUENCY:
        x = x[..., sequency_permutation(order)]
    return x
