"""Walsh-domain fingerprinting of interferer captures.

A capture is cut into length-N blocks, each block is Walsh transformed, and
per-branch statistics are accumulated. The resulting mask describes how the
interferer's power is split across the N branches; the concentration report
scores how peaked that split is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ofdm import (
    SYSTEM_SAMPLE_RATE,
    InterfererPlacement,
    OfdmConfig,
    RealCapture,
    generate_baseband,
    symbols_for_blocks,
    upconvert_to_system_rate,
)
from .walsh import WalshBasis, fast_transform

MIN_MASK_BLOCKS = 1000


class InsufficientDataError(ValueError):
    pass


class BlockPolicy(str, Enum):
    ALIGNED = "aligned"
    RANDOM_OFFSET = "random-offset"


class MaskStatistic(str, Enum):
    RMS = "rms"
    MEAN_ABS = "mean-abs"


@dataclass
class InterferenceMask:
    """Per-branch interference amplitude weights, normalised to RMS 1."""

    weights: np.ndarray
    center_frequency: float = float("nan")
    bandwidth: float = float("nan")
    blocks_averaged: int = 0
    statistic: str = MaskStatistic.RMS.value
    seed: int | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("mask weights must be a finite non-negative vector")

    @property
    def order(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, order: int) -> "InterferenceMask":
        return cls(np.ones(order), statistic="uniform")

    @classmethod
    def single_branch(cls, order: int, branch: int) -> "InterferenceMask":
        w = np.zeros(order)
        w[branch] = np.sqrt(order)
        return cls(w, statistic="single-branch")


@dataclass
class ConcentrationReport:
    per_branch_power: np.ndarray
    per_branch_peak: np.ndarray
    mad_from_peak: float
    peak_branch_index: int
    center_frequency: float = float("nan")
    blocks: int = 0
    extra: dict = field(default_factory=dict)


def _blocks(capture, order: int, policy, rng, num_blocks: int | None, min_blocks: int) -> np.ndarray:
    x = np.asarray(capture.samples if isinstance(capture, RealCapture) else capture, dtype=float)
    policy = BlockPolicy(policy)
    offset = 0
    if policy is BlockPolicy.RANDOM_OFFSET:
        rng = np.random.default_rng(rng)
        offset = int(rng.integers(0, order))
    available = (len(x) - offset) // order
    if num_blocks is not None:
        if available < num_blocks:
            raise InsufficientDataError(
                f"capture of {len(x)} samples holds {available} blocks, need {num_blocks}"
            )
        available = num_blocks
    if available < max(min_blocks, 1):
        raise InsufficientDataError(
            f"capture of {len(x)} samples holds {available} blocks of {order}, need {max(min_blocks, 1)}"
        )
    return x[offset: offset + available * order].reshape(available, order)


def _column_fsum(a: np.ndarray) -> np.ndarray:
    # compensated per-branch sums: result does not depend on block order
    return np.array([math.fsum(col) for col in a.T])


def walsh_coefficients(capture, basis: WalshBasis, policy=BlockPolicy.ALIGNED, rng=None,
                       num_blocks: int | None = None, min_blocks: int = 1) -> np.ndarray:
    """Walsh coefficients of consecutive capture blocks, shape ``(blocks, N)``."""
    blocks = _blocks(capture, basis.order, policy, rng, num_blocks, min_blocks)
    return fast_transform(basis.order, blocks, basis.ordering)


def extract_mask(
    capture,
    basis: WalshBasis,
    block_offset_policy=BlockPolicy.RANDOM_OFFSET,
    *,
    rng=None,
    num_blocks: int | None = None,
    statistic=MaskStatistic.RMS,
    min_blocks: int = MIN_MASK_BLOCKS,
    center_frequency: float = float("nan"),
    bandwidth: float = float("nan"),
    seed: int | None = None,
) -> InterferenceMask:
    """Estimate the per-branch interference mask of a capture.

    Each branch weight is the RMS of that branch's Walsh coefficient over all
    blocks (or the mean absolute value with ``statistic="mean-abs"``); the
    weight vector is then scaled to unit RMS so only the channel's ICI level
    sets injected power.
    """
    statistic = MaskStatistic(statistic)
    X = walsh_coefficients(capture, basis, block_offset_policy, rng, num_blocks, min_blocks)
    nblk = X.shape[0]
    if statistic is MaskStatistic.RMS:
        w = np.sqrt(_column_fsum(X * X) / nblk)
    else:
        w = _column_fsum(np.abs(X)) / nblk
    scale = np.sqrt(np.mean(w * w))
    if scale == 0:
        raise InsufficientDataError("capture is silent; mask is undefined")
    return InterferenceMask(
        w / scale,
        center_frequency=center_frequency,
        bandwidth=bandwidth,
        blocks_averaged=nblk,
        statistic=statistic.value,
        seed=seed,
    )


def mad_from_peak(profile, normalization: str = "peak") -> float:
    """Mean shortfall of each branch below the strongest branch.

    ``profile`` is a non-negative per-branch amplitude profile. With
    ``normalization="peak"`` it is scaled so the strongest branch is 1, which
    bounds the score by (N-1)/N for a single-branch interferer and gives 0 for
    a flat profile. ``"l2"`` scales the profile to unit Euclidean norm
    instead, which weighs how much of the total power the peak holds.
    """
    p = np.asarray(profile, dtype=float)
    if normalization == "peak":
        ref = p.max()
    elif normalization == "l2":
        ref = np.linalg.norm(p)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    if ref == 0:
        return 0.0
    q = p / ref
    return float(np.mean(q.max() - q))


def concentration_report(
    capture,
    basis: WalshBasis,
    block_offset_policy=BlockPolicy.ALIGNED,
    *,
    rng=None,
    num_blocks: int | None = None,
    min_blocks: int = MIN_MASK_BLOCKS,
    normalization: str = "peak",
    center_frequency: float = float("nan"),
) -> ConcentrationReport:
    X = walsh_coefficients(capture, basis, block_offset_policy, rng, num_blocks, min_blocks)
    nblk = X.shape[0]
    power = _column_fsum(X * X) / nblk
    peak = np.abs(X).max(axis=0)
    amplitude = np.sqrt(power)
    return ConcentrationReport(
        per_branch_power=power,
        per_branch_peak=peak,
        mad_from_peak=mad_from_peak(amplitude, normalization),
        peak_branch_index=int(np.argmax(power)),
        center_frequency=center_frequency,
        blocks=nblk,
    )


def sweep_frequencies(
    cfg: OfdmConfig | None,
    frequencies,
    basis: WalshBasis,
    seed=None,
    *,
    num_blocks: int = 10_000,
    system_sample_rate: float = SYSTEM_SAMPLE_RATE,
    normalization: str = "peak",
) -> list[ConcentrationReport]:
    """Concentration report per centre frequency, same waveform for all of them."""
    frequencies = list(frequencies)
    if not frequencies:
        return []
    cfg = cfg or OfdmConfig()
    need = symbols_for_blocks(num_blocks, basis.order, cfg, system_sample_rate)
    if cfg.num_symbols < need:
        cfg = _with_symbols(cfg, need)
    bb = generate_baseband(cfg, seed)
    reports = []
    for fc in frequencies:
        cap = upconvert_to_system_rate(bb, InterfererPlacement(fc, system_sample_rate), cfg)
        reports.append(
            concentration_report(cap, basis, num_blocks=num_blocks,
                                 min_blocks=min(num_blocks, MIN_MASK_BLOCKS),
                                 normalization=normalization, center_frequency=fc)
        )
    return reports


def _with_symbols(cfg: OfdmConfig, num_symbols: int) -> OfdmConfig:
    from dataclasses import replace

    return replace(cfg, num_symbols=num_symbols)


def fingerprint_interferer(
    center_frequency: float,
    basis: WalshBasis,
    cfg: OfdmConfig | None = None,
    seed: int = 0,
    *,
    num_blocks: int = 10_000,
    statistic=MaskStatistic.RMS,
    system_sample_rate: float = SYSTEM_SAMPLE_RATE,
) -> InterferenceMask:
    """Generate a CP-OFDM interferer at ``center_frequency`` and extract its mask."""
    cfg = cfg or OfdmConfig()
    need = symbols_for_blocks(num_blocks, basis.order, cfg, system_sample_rate)
    if cfg.num_symbols < need:
        cfg = _with_symbols(cfg, need)
    ss = np.random.SeedSequence(seed)
    wave_seed, offset_seed = ss.spawn(2)
    cap = upconvert_to_system_rate(
        generate_baseband(cfg, wave_seed), InterfererPlacement(center_frequency, system_sample_rate), cfg
    )
    return extract_mask(
        cap, basis, BlockPolicy.RANDOM_OFFSET, rng=offset_seed, num_blocks=num_blocks,
        statistic=statistic, center_frequency=center_frequency,
        bandwidth=cfg.occupied_bandwidth, seed=seed,
    )
