"""Monte-Carlo BLER measurement and the frequency / ICI-level sweeps.

Randomness is keyed by ``(seed, scenario key, chunk index)`` with a
counter-based Philox generator per chunk of ``CHUNK_BLOCKS`` blocks. Chunks
are evaluated in waves (optionally on a thread pool) and reduced in index
order, so the result of a measurement never depends on the worker count.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import autoencoder as ae
from . import channel as ch
from .fingerprint import InterferenceMask

log = logging.getLogger(__name__)

CHUNK_BLOCKS = 1 << 16
DEFAULT_MIN_ERRORS = 100
DEFAULT_MAX_BLOCKS = 10**8
ICI_GRID = tuple(float(x) for x in range(1, 13))
LABELS = ("baseline", "ici-unaware-model", "ici-aware-model")


@dataclass
class BlerPoint:
    ebn0_db: float
    bler: float
    block_errors: int
    blocks: int
    ci95_halfwidth: float
    ci_low: float = 0.0
    ci_high: float = 1.0
    censored: bool = False


@dataclass
class RejectionPoint:
    center_frequency: float
    max_ici_db: float | None
    target_bler: float
    ebn0_db: float
    points: dict = field(default_factory=dict)


@dataclass
class ScenarioSpec:
    """One curve: a model evaluated with or without a mask at a fixed ICI level."""

    model: ae.AutoencoderModel
    label: str
    mask: InterferenceMask | None = None
    ici_db: float = 0.0
    ebn0_grid: Sequence[float] = (4.0, 5.0, 6.0, 7.0, 8.0)
    name: str = ""
    center_frequency: float = float("nan")

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        trained_ici = float(self.model.meta.get("ici_db", 0.0) or 0.0)
        if self.label == "baseline":
            if self.mask is not None or self.ici_db != 0:
                raise ValueError("baseline scenario cannot carry interference")
        else:
            if self.mask is None or self.ici_db == 0:
                raise ValueError(f"{self.label} scenario needs a mask and a nonzero ici_db")
            if self.label == "ici-unaware-model" and trained_ici != 0:
                raise ValueError("ici-unaware scenario needs a model trained without interference")
            if self.label == "ici-aware-model" and trained_ici == 0:
                raise ValueError("ici-aware scenario needs a model trained with interference")
        if not self.name:
            fc = "" if np.isnan(self.center_frequency) else f"@{self.center_frequency / 1e6:g}MHz"
            self.name = f"{self.label}{fc}/ici{self.ici_db:g}"

    def channel(self, ebn0_db: float) -> ch.ChannelConfig:
        return ch.ChannelConfig(ebn0_db, self.ici_db, self.mask, self.model.topology.rate)


# -- confidence intervals ------------------------------------------------------

def clopper_pearson(errors: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for ``errors`` out of ``n``."""
    if n <= 0:
        return 0.0, 1.0
    a = (1 - level) / 2
    lo = 0.0 if errors == 0 else float(stats.beta.ppf(a, errors, n - errors + 1))
    hi = 1.0 if errors == n else float(stats.beta.ppf(1 - a, errors + 1, n - errors))
    return lo, hi


def make_point(ebn0_db: float, errors: int, blocks: int) -> BlerPoint:
    lo, hi = clopper_pearson(errors, blocks)
    censored = errors == 0
    return BlerPoint(
        ebn0_db=float(ebn0_db),
        bler=hi if censored else errors / blocks,
        block_errors=int(errors),
        blocks=int(blocks),
        ci95_halfwidth=(hi - lo) / 2,
        ci_low=lo,
        ci_high=hi,
        censored=censored,
    )


# -- Monte-Carlo driver --------------------------------------------------------

def scenario_key(*parts) -> int:
    """Stable 64-bit key for a scenario description."""
    text = "|".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def chunk_rng(seed: int, key: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(key), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def run_trials(
    trial: Callable[[np.random.Generator, int], int],
    seed: int,
    key: int,
    *,
    min_errors: int = DEFAULT_MIN_ERRORS,
    max_blocks: int = DEFAULT_MAX_BLOCKS,
    chunk_blocks: int = CHUNK_BLOCKS,
    workers: int = 1,
    target: float | None = None,
) -> tuple[int, int]:
    """Count block errors chunk by chunk until a stopping rule fires.

    ``trial(rng, n)`` simulates ``n`` blocks and returns how many were in
    error. Stops once ``min_errors`` errors are collected or ``max_blocks``
    blocks are spent. With ``target`` set, also stops as soon as the 95% CI
    lies entirely on one side of it.
    """
    errors = blocks = 0
    index = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while blocks < max_blocks:
            sizes = []
            for j in range(max(1, workers)):
                remaining = max_blocks - blocks - sum(sizes)
                if remaining <= 0:
                    break
                sizes.append(min(chunk_blocks, remaining))
            jobs = [(index + j, n) for j, n in enumerate(sizes)]
            if pool is None:
                counts = [trial(chunk_rng(seed, key, i), n) for i, n in jobs]
            else:
                counts = list(pool.map(lambda job: trial(chunk_rng(seed, key, job[0]), job[1]), jobs))
            for (_, n), c in zip(jobs, counts):
                errors += c
                blocks += n
                index += 1
                if _should_stop(errors, blocks, min_errors, target):
                    return errors, blocks
    finally:
        if pool is not None:
            pool.shutdown()
    return errors, blocks


def _should_stop(errors, blocks, min_errors, target) -> bool:
    if errors >= min_errors:
        return True
    if target is not None and blocks >= CHUNK_BLOCKS:
        lo, hi = clopper_pearson(errors, blocks)
        return hi < target or lo > target
    return False


def autoencoder_trial(model: ae.AutoencoderModel, cfg: ch.ChannelConfig):
    cb = ae.codebook(model)
    m = model.topology.m

    def trial(rng: np.random.Generator, n: int) -> int:
        msgs = rng.integers(0, m, size=n)
        received = ch.apply(cfg, cb[msgs], rng).received
        return int(np.count_nonzero(ae.infer(model, received) != msgs))

    return trial


def measure_bler(
    scenario: ScenarioSpec,
    ebn0_db: float,
    seed: int = 0,
    *,
    min_errors: int = DEFAULT_MIN_ERRORS,
    max_blocks: int = DEFAULT_MAX_BLOCKS,
    workers: int = 1,
    target: float | None = None,
) -> BlerPoint:
    """Block error rate of ``scenario`` at one Eb/N0.

    Zero errors at ``max_blocks`` yields a censored point whose ``bler`` is
    the 95% upper bound.
    """
    key = scenario_key(scenario.name, float(ebn0_db))
    trial = autoencoder_trial(scenario.model, scenario.channel(ebn0_db))
    errors, blocks = run_trials(trial, seed, key, min_errors=min_errors, max_blocks=max_blocks,
                                workers=workers, target=target)
    point = make_point(ebn0_db, errors, blocks)
    if point.censored:
        log.warning("%s at %.2f dB: no errors in %d blocks (censored)", scenario.name, ebn0_db, blocks)
    return point


def bler_curve(scenario: ScenarioSpec, ebn0_grid=None, seed: int = 0, **kw) -> list[BlerPoint]:
    grid = scenario.ebn0_grid if ebn0_grid is None else ebn0_grid
    return [measure_bler(scenario, e, seed, **kw) for e in grid]


def cis_overlap(a: BlerPoint, b: BlerPoint) -> bool:
    return a.ci_low <= b.ci_high and b.ci_low <= a.ci_high


def ensemble_median(points: Sequence[BlerPoint]) -> BlerPoint:
    """The member point with the median BLER (odd ensembles) or the lower-middle one."""
    ordered = sorted(points, key=lambda p: p.bler)
    return ordered[(len(ordered) - 1) // 2]


# -- sweeps --------------------------------------------------------------------

SUBMULTIPLES_HZ = (2.5e9, 1.25e9)


def offset_from_submultiple(fc: float, submultiples=SUBMULTIPLES_HZ) -> float:
    return float(min(abs(fc - s) for s in submultiples))


def fit_offset_gradient(frequencies, blers, submultiples=SUBMULTIPLES_HZ) -> tuple[float, float]:
    """Least-squares slope of BLER against offset (MHz) from the nearest sub-multiple.

    Returns ``(slope_per_mhz, r_squared)``.
    """
    x = np.array([offset_from_submultiple(f, submultiples) for f in frequencies]) / 1e6
    y = np.asarray(blers, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0, float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1 - np.sum(resid**2) / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), float(r2)


@dataclass
class FrequencySweep:
    rows: list  # (center_frequency, BlerPoint)
    gradients: dict  # ebn0_db -> (slope_per_mhz, r2)

    @property
    def mean_abs_gradient(self) -> float:
        vals = [abs(g[0]) for g in self.gradients.values()]
        return float(np.mean(vals)) if vals else float("nan")


def frequency_sweep(
    models: dict,
    masks: dict,
    frequencies,
    ici_db: float,
    ebn0_grid,
    seed: int = 0,
    **kw,
) -> FrequencySweep:
    """Evaluate the ICI-aware model of each frequency at a fixed ICI level.

    ``models`` and ``masks`` map centre frequency to the trained model and its
    interference mask.
    """
    rows = []
    per_ebn0: dict[float, list] = {}
    for fc in frequencies:
        sc = ScenarioSpec(models[fc], "ici-aware-model", masks[fc], ici_db, ebn0_grid, center_frequency=fc)
        for p in bler_curve(sc, ebn0_grid, seed, **kw):
            rows.append((fc, p))
            per_ebn0.setdefault(p.ebn0_db, []).append((fc, p.bler))
    gradients = {}
    for e, vals in per_ebn0.items():
        f, b = zip(*vals)
        gradients[e] = fit_offset_gradient(f, b)
    return FrequencySweep(rows, gradients)


def meets_target(point: BlerPoint, target: float) -> bool:
    """CI-aware pass: upper bound below target, or a point estimate below it when the CI straddles."""
    if point.ci_high < target:
        return True
    if point.ci_low > target:
        return False
    return point.bler < target


def ici_rejection_sweep(
    model_for: Callable[[float, float], ae.AutoencoderModel],
    masks: dict,
    frequencies,
    target_bler: float = 1e-4,
    ebn0_db: float = 8.0,
    ici_grid=ICI_GRID,
    seed: int = 0,
    **kw,
) -> list[RejectionPoint]:
    """Largest ICI level on ``ici_grid`` at which the aware model meets ``target_bler``.

    ``model_for(fc, ici_db)`` returns (trains or loads) the ICI-aware model
    for one scenario, or a list of independently trained models, in which
    case the median-BLER member decides. Levels are tried from the top of
    the grid down; the first level that meets the target is the answer, so
    no monotonicity in the level is assumed.
    """
    out = []
    for fc in frequencies:
        found = None
        tried = {}
        for level in sorted(ici_grid, reverse=True):
            models = model_for(fc, level)
            if isinstance(models, ae.AutoencoderModel):
                models = [models]
            pts = []
            for i, model in enumerate(models):
                sc = ScenarioSpec(model, "ici-aware-model", masks[fc], level, (ebn0_db,),
                                  name=f"ici-aware-model@{fc / 1e6:g}MHz/ici{level:g}/m{i}",
                                  center_frequency=fc)
                pts.append(measure_bler(sc, ebn0_db, seed, target=target_bler, **kw))
            p = ensemble_median(pts)
            tried[level] = p
            log.info("fc=%.0f MHz ici=%g dB: BLER %.3g (%d/%d)", fc / 1e6, level, p.bler,
                     p.block_errors, p.blocks)
            if meets_target(p, target_bler):
                found = level
                break
        out.append(RejectionPoint(fc, found, target_bler, ebn0_db, tried))
    return out
