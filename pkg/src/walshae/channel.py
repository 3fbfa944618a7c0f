"""AWGN plus mask-shaped Gaussian interference on Walsh-domain codewords."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fingerprint import InterferenceMask


class ChannelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelConfig:
    """Channel operating point.

    ``ici_db`` is the ratio of branch-averaged interference power to the
    per-branch noise power ``N0``; 0 switches interference off.
    """

    ebn0_db: float
    ici_db: float = 0.0
    mask: InterferenceMask | None = None
    code_rate: float = 4 / 32

    def __post_init__(self):
        if not 0 < self.code_rate <= 1:
            raise ChannelConfigError(f"code_rate must be in (0, 1], got {self.code_rate}")
        if self.ici_db != 0 and self.mask is None:
            raise ChannelConfigError(f"ici_db={self.ici_db} requires an interference mask")

    @property
    def interference_active(self) -> bool:
        return self.ici_db != 0 and self.mask is not None


@dataclass
class ChannelRealization:
    noise: np.ndarray
    interference_draw: np.ndarray
    received: np.ndarray


def noise_variance(cfg: ChannelConfig) -> float:
    """Per-real-sample noise variance for unit transmit power: 1/(2 R Eb/N0)."""
    return 1.0 / (2.0 * cfg.code_rate * 10.0 ** (cfg.ebn0_db / 10.0))


def interference_scale(cfg: ChannelConfig) -> float:
    if not cfg.interference_active:
        return 0.0
    return float(np.sqrt(noise_variance(cfg) * 10.0 ** (cfg.ici_db / 10.0)))


def apply(cfg: ChannelConfig, codeword, rng) -> ChannelRealization:
    """Add noise and interference to one codeword or a ``(batch, N)`` stack.

    Noise is drawn first, then the interference innovations, so a fixed
    generator state gives the same realisation regardless of ``ici_db``.
    """
    x = np.asarray(codeword, dtype=float)
    rng = np.random.default_rng(rng)
    n0 = noise_variance(cfg)
    noise = rng.standard_normal(x.shape) * np.sqrt(n0)
    if cfg.interference_active:
        if cfg.mask.order != x.shape[-1]:
            raise ChannelConfigError(
                f"mask has {cfg.mask.order} branches, codeword has {x.shape[-1]}"
            )
        eta = rng.standard_normal(x.shape)
        interference = interference_scale(cfg) * cfg.mask.weights * eta
    else:
        interference = np.zeros_like(x)
    return ChannelRealization(noise, interference, x + noise + interference)


def differentiable_apply(cfg: ChannelConfig, codeword, rng):
    """Like :func:`apply`, plus the backward map for the received vector.

    The channel is additive, so d(received)/d(codeword) is the identity and
    the backward map returns upstream gradients unchanged.
    """
    real = apply(cfg, codeword, rng)

    def backward(grad_received):
        return grad_received

    return real, backward
