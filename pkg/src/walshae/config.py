"""Strict TOML run configuration.

Unknown sections or keys, type mismatches and invariant violations are all
collected and raised together as a :class:`ConfigError`, each message
prefixed with the offending key path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .autoencoder import Topology, TrainingConfig
from .channel import ChannelConfig
from .ofdm import ConfigurationError, InterfererPlacement, OfdmConfig


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_REQUIRED = object()
_NUM = (int, float)

# section -> key -> (accepted types, default); _REQUIRED marks mandatory keys
SCHEMA = {
    "scenario": {"name": (str, _REQUIRED)},
    "topology": {"k": (int, _REQUIRED), "n": (int, _REQUIRED)},
    "ofdm": {
        "fft_size": (int, 1024),
        "active_subcarriers": (int, 792),
        "qam_order": (int, 64),
        "native_sample_rate": (_NUM, 61.44e6),
        "cp_samples": (int, 256),
        "symbol_duration": (_NUM, 20.83e-6),
    },
    "placement": {
        "system_sample_rate": (_NUM, 5e9),
        "frequencies_mhz": (list, [1250.0, 1350.0, 1450.0, 1550.0, 1650.0,
                                   2075.0, 2175.0, 2275.0, 2375.0, 2475.0]),
        "power_scale": (_NUM, 1.0),
    },
    "fingerprint": {
        "blocks": (int, 10_000),
        "statistic": (str, "rms"),
        "policy": (str, "random-offset"),
        "submultiple_frequencies_mhz": (list, [2475.0, 1250.0, 625.0, 312.5]),
        "normalization": (str, "peak"),
    },
    "channel": {
        "ebn0_db": (_NUM, _REQUIRED),
        "ici_db": (_NUM, 0.0),
        "interference_fc_mhz": (_NUM, None),
        "mask_file": (str, None),
    },
    "training": {
        "batch_size": (int, 256),
        "steps": (int, 30_000),
        "learning_rate": (_NUM, 1e-3),
        "optimizer": (str, "adam"),
        "train_ebn0_db": (_NUM, 8.0),
    },
    "evaluation": {
        "ebn0_grid_db": (list, [4.0, 5.0, 6.0, 7.0, 8.0]),
        "ici_db": (_NUM, 6.0),
        "ici_grid_db": (list, [float(x) for x in range(1, 13)]),
        "target_bler": (_NUM, 1e-4),
        "min_errors": (int, 100),
        "max_blocks": (int, 10**8),
        "ensemble_seeds": (list, [1, 2, 3]),
        "sweep_frequencies_mhz": (list, [1250.0, 1350.0, 1450.0, 1550.0, 1650.0,
                                         2075.0, 2175.0, 2275.0, 2375.0, 2475.0]),
        "rejection_frequencies_mhz": (list, [1250.0, 1350.0, 1450.0, 1550.0, 1650.0,
                                             2075.0, 2175.0, 2275.0, 2375.0, 2475.0]),
    },
    "run": {
        "seed": (int, 0),
        "output_dir": (str, "out"),
        "workers": (int, 1),
    },
}


@dataclass
class RunConfig:
    scenario: str
    topology: Topology
    ofdm: OfdmConfig
    placements: list
    channel: ChannelConfig
    training: TrainingConfig
    fingerprint: dict
    evaluation: dict
    seed: int
    output_dir: str
    workers: int
    ici_db: float = 0.0
    interference_fc_hz: float | None = None
    mask_file: str | None = None
    raw: dict = field(default_factory=dict)


def _type_ok(value, types) -> bool:
    if types is _NUM or types == _NUM:
        return isinstance(value, _NUM) and not isinstance(value, bool)
    if types is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, types)


def _flatten(doc: dict, errors: list) -> dict:
    values: dict = {}
    for section, keys in doc.items():
        if section not in SCHEMA:
            errors.append(f"{section}: unknown section")
            continue
        if not isinstance(keys, dict):
            errors.append(f"{section}: expected a table")
            continue
        for key, value in keys.items():
            path = f"{section}.{key}"
            if key not in SCHEMA[section]:
                errors.append(f"{path}: unknown key")
                continue
            types, _ = SCHEMA[section][key]
            if not _type_ok(value, types):
                errors.append(f"{path}: expected {_type_name(types)}, got {type(value).__name__}")
                continue
            if types is list and not all(_type_ok(v, _NUM) for v in value):
                errors.append(f"{path}: expected a list of numbers")
                continue
            values[path] = value
    for section, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            path = f"{section}.{key}"
            if path in values:
                continue
            if default is _REQUIRED:
                errors.append(f"{path}: required key missing")
            else:
                values[path] = default
    return values


def _type_name(types) -> str:
    if types == _NUM:
        return "number"
    return types.__name__


def parse_config(text: str, base_dir: str | Path | None = None) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([f"<document>: {e}"]) from e
    errors: list[str] = []
    v = _flatten(doc, errors)
    if errors:
        raise ConfigError(errors)

    def check(path, fn):
        try:
            return fn()
        except (ConfigurationError, ValueError) as e:
            errors.append(f"{path}: {e}")
            return None

    topology = check("topology", lambda: Topology(v["topology.k"], v["topology.n"]))
    if topology is not None and (topology.n & (topology.n - 1)):
        errors.append("topology.n: must be a power of two")
    ofdm = check("ofdm", lambda: OfdmConfig(
        fft_size=v["ofdm.fft_size"],
        active_subcarriers=v["ofdm.active_subcarriers"],
        qam_order=v["ofdm.qam_order"],
        native_sample_rate=float(v["ofdm.native_sample_rate"]),
        cp_samples=v["ofdm.cp_samples"],
        symbol_duration=float(v["ofdm.symbol_duration"]),
    ))
    placements = []
    fs = float(v["placement.system_sample_rate"])
    for f in v["placement.frequencies_mhz"]:
        p = InterfererPlacement(float(f) * 1e6, fs, float(v["placement.power_scale"]))
        if ofdm is not None:
            check(f"placement.frequencies_mhz[{f}]", lambda p=p: p.validate(ofdm.occupied_bandwidth))
        placements.append(p)

    fc_mhz = v["channel.interference_fc_mhz"]
    mask_file = v["channel.mask_file"]
    if mask_file is not None and base_dir is not None and not Path(mask_file).is_absolute():
        mask_file = str(Path(base_dir) / mask_file)
    ici = float(v["channel.ici_db"])
    if ici != 0 and fc_mhz is None and mask_file is None:
        errors.append("channel.ici_db: nonzero ICI level requires channel.interference_fc_mhz or channel.mask_file")
    rate = topology.rate if topology is not None else 0.125
    # mask is attached at run time; validate the rest of the channel invariants here
    channel = check("channel", lambda: ChannelConfig(float(v["channel.ebn0_db"]), 0.0, None, rate))
    training = check("training", lambda: TrainingConfig(
        batch_size=v["training.batch_size"],
        steps=v["training.steps"],
        learning_rate=float(v["training.learning_rate"]),
        optimizer=v["training.optimizer"],
        train_ebn0_db=float(v["training.train_ebn0_db"]),
        seed=v["run.seed"],
    ))
    if v["fingerprint.blocks"] < 1000:
        errors.append("fingerprint.blocks: masks need at least 1000 blocks")
    if v["fingerprint.statistic"] not in ("rms", "mean-abs"):
        errors.append("fingerprint.statistic: must be 'rms' or 'mean-abs'")
    if v["fingerprint.policy"] not in ("aligned", "random-offset"):
        errors.append("fingerprint.policy: must be 'aligned' or 'random-offset'")
    if v["fingerprint.normalization"] not in ("peak", "l2"):
        errors.append("fingerprint.normalization: must be 'peak' or 'l2'")
    if not 0 < v["evaluation.target_bler"] < 1:
        errors.append("evaluation.target_bler: must be in (0, 1)")
    if v["evaluation.min_errors"] < 1:
        errors.append("evaluation.min_errors: must be >= 1")
    if v["evaluation.max_blocks"] < 1:
        errors.append("evaluation.max_blocks: must be >= 1")
    if not v["evaluation.ensemble_seeds"]:
        errors.append("evaluation.ensemble_seeds: need at least one seed")
    if v["run.workers"] < 1:
        errors.append("run.workers: must be >= 1")
    if v["run.seed"] < 0:
        errors.append("run.seed: must be non-negative")
    if errors:
        raise ConfigError(errors)

    fingerprint = {k.split(".", 1)[1]: val for k, val in v.items() if k.startswith("fingerprint.")}
    evaluation = {k.split(".", 1)[1]: val for k, val in v.items() if k.startswith("evaluation.")}
    return RunConfig(
        scenario=v["scenario.name"],
        topology=topology,
        ofdm=ofdm,
        placements=placements,
        channel=channel,
        training=training,
        fingerprint=fingerprint,
        evaluation=evaluation,
        seed=v["run.seed"],
        output_dir=v["run.output_dir"],
        workers=v["run.workers"],
        ici_db=ici,
        interference_fc_hz=None if fc_mhz is None else float(fc_mhz) * 1e6,
        mask_file=mask_file,
        raw=_snapshot(v),
    )


def _snapshot(values: dict) -> dict:
    out: dict = {}
    for path, val in sorted(values.items()):
        section, key = path.split(".", 1)
        out.setdefault(section, {})[key] = val
    return out


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"{path}: {e}"]) from e
    return parse_config(text, base_dir=path.parent)


def default_config_text() -> str:
    return resources.files("walshae").joinpath("default.toml").read_text()


def default_config() -> RunConfig:
    return parse_config(default_config_text())
