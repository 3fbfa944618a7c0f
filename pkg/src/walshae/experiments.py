"""Scenario orchestration shared by the CLI, the demo scripts and the acceptance tests.

Models are memoised per ``(scenario, seed)`` inside a :class:`Lab`, so a
figure that needs the same baseline several times trains it once.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import autoencoder as ae
from . import evaluation as ev
from .fingerprint import InterferenceMask, fingerprint_interferer, sweep_frequencies
from .ofdm import SYSTEM_SAMPLE_RATE, OfdmConfig
from .walsh import build_basis

log = logging.getLogger(__name__)

FS = SYSTEM_SAMPLE_RATE
NEAR_FS2 = 2475e6  # closest placeable centre to fs/2 for a 47.52 MHz carrier
FS4 = 1250e6


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from arbitrary labels."""
    text = "|".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "little")


@dataclass
class Lab:
    """Masks and trained models for one run, built lazily and cached."""

    topology: ae.Topology = field(default_factory=ae.Topology)
    training: ae.TrainingConfig = field(default_factory=ae.TrainingConfig)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    seed: int = 0
    fingerprint_blocks: int = 10_000
    statistic: str = "rms"
    system_sample_rate: float = FS
    _masks: dict = field(default_factory=dict, repr=False)
    _models: dict = field(default_factory=dict, repr=False)

    @property
    def basis(self):
        return build_basis(self.topology.n)

    def mask(self, fc: float) -> InterferenceMask:
        fc = float(fc)
        if fc not in self._masks:
            self._masks[fc] = fingerprint_interferer(
                fc, self.basis, self.ofdm, seed=derive_seed(self.seed, "mask", fc),
                num_blocks=self.fingerprint_blocks, statistic=self.statistic,
                system_sample_rate=self.system_sample_rate,
            )
        return self._masks[fc]

    def _train(self, key, member: int, **overrides) -> ae.AutoencoderModel:
        if key not in self._models:
            tcfg = replace(self.training, seed=derive_seed(self.seed, "train", key), **overrides)
            log.info("training %s (%d steps)", key, tcfg.steps)
            model, _ = ae.train(derive_seed(self.seed, "init", member), tcfg, self.topology)
            model.meta["member"] = member
            self._models[key] = model
        return self._models[key]

    def baseline(self, member: int = 1) -> ae.AutoencoderModel:
        return self._train(("baseline", member), member, scenario_id=f"baseline/m{member}")

    def aware(self, fc: float, ici_db: float, member: int = 1) -> ae.AutoencoderModel:
        fc, ici_db = float(fc), float(ici_db)
        key = ("aware", fc, ici_db, member)
        return self._train(key, member, ici_db=ici_db, mask=self.mask(fc),
                           scenario_id=f"aware@{fc / 1e6:g}MHz/ici{ici_db:g}/m{member}")

    # -- scenarios ---------------------------------------------------------

    def baseline_scenario(self, member=1, grid=(8.0,)) -> ev.ScenarioSpec:
        return ev.ScenarioSpec(self.baseline(member), "baseline", ebn0_grid=grid,
                               name=f"baseline/m{member}")

    def unaware_scenario(self, fc, ici_db, member=1, grid=(8.0,)) -> ev.ScenarioSpec:
        return ev.ScenarioSpec(self.baseline(member), "ici-unaware-model", self.mask(fc), ici_db, grid,
                               name=f"unaware@{fc / 1e6:g}MHz/ici{ici_db:g}/m{member}",
                               center_frequency=fc)

    def aware_scenario(self, fc, ici_db, member=1, grid=(8.0,)) -> ev.ScenarioSpec:
        return ev.ScenarioSpec(self.aware(fc, ici_db, member), "ici-aware-model", self.mask(fc), ici_db,
                               grid, name=f"aware@{fc / 1e6:g}MHz/ici{ici_db:g}/m{member}",
                               center_frequency=fc)


def rows_for(scenario: ev.ScenarioSpec, points) -> list[dict]:
    fc = scenario.center_frequency
    return [
        {
            "scenario": scenario.name,
            "label": scenario.label,
            "fc_hz": float("nan") if np.isnan(fc) else float(fc),
            "ici_db": float(scenario.ici_db),
            "ebn0_db": p.ebn0_db,
            "blocks": p.blocks,
            "block_errors": p.block_errors,
            "bler": p.bler,
            "ci95": p.ci95_halfwidth,
        }
        for p in points
    ]


def ensemble_point(lab: Lab, make_scenario, ebn0_db: float, members, seed: int = 0, **kw) -> ev.BlerPoint:
    """Median-BLER point over an ensemble of independently trained models."""
    pts = [ev.measure_bler(make_scenario(m), ebn0_db, seed, **kw) for m in members]
    return ev.ensemble_median(pts)


def concentration_sweep(frequencies, lab: Lab, num_blocks: int = 10_000, normalization: str = "peak"):
    return sweep_frequencies(lab.ofdm, frequencies, lab.basis, seed=derive_seed(lab.seed, "sweep"),
                             num_blocks=num_blocks, system_sample_rate=lab.system_sample_rate,
                             normalization=normalization)


def decay_gradient(values) -> float:
    """Mean relative step change of a sequence (e.g. -0.037 for 3.7% decay per step)."""
    v = np.asarray(values, dtype=float)
    return float(np.mean(np.diff(v) / v[:-1]))
