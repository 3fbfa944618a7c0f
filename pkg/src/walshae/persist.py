"""Artifact persistence: masks, models, captures, result CSVs and run manifests.

Numeric text artifacts write every float with 17 significant digits, which
round-trips IEEE doubles exactly. Every loader checks the format version and
names the offending file on failure.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .autoencoder import PARAM_NAMES, AutoencoderModel, Topology
from .fingerprint import InterferenceMask
from .ofdm import RealCapture

MASK_VERSION = 1
MODEL_VERSION = 1
CAPTURE_VERSION = 1

CSV_COLUMNS = ("scenario", "label", "fc_hz", "ici_db", "ebn0_db", "blocks", "block_errors", "bler", "ci95")


class LoadError(ValueError):
    pass


def fmt(x: float) -> str:
    return f"{float(x):.16e}"


def _parse_header(lines, path, magic):
    if not lines or lines[0].strip() != magic:
        raise LoadError(f"{path}: not a {magic!r} file")
    header = {}
    i = 1
    while i < len(lines) and ":" in lines[i] and not lines[i].startswith("["):
        key, _, value = lines[i].partition(":")
        if key.strip() in ("weights",):
            break
        header[key.strip()] = value.strip()
        i += 1
    return header, i


def _check_version(header, expected, path):
    try:
        version = int(header["version"])
    except (KeyError, ValueError):
        raise LoadError(f"{path}: missing or invalid version") from None
    if version != expected:
        raise LoadError(f"{path}: version {version} not supported (expected {expected})")


# -- masks ---------------------------------------------------------------------

def save_mask(mask: InterferenceMask, path) -> None:
    lines = [
        "# walshae interference mask",
        f"version: {MASK_VERSION}",
        f"N: {mask.order}",
        f"center_frequency_hz: {fmt(mask.center_frequency)}",
        f"bandwidth_hz: {fmt(mask.bandwidth)}",
        f"blocks_averaged: {mask.blocks_averaged}",
        f"statistic: {mask.statistic}",
        f"seed: {'none' if mask.seed is None else mask.seed}",
        "weights:",
    ]
    lines += [fmt(w) for w in mask.weights]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mask(path, expected_order: int | None = None) -> InterferenceMask:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise LoadError(f"{path}: {e}") from e
    header, i = _parse_header(lines, path, "# walshae interference mask")
    _check_version(header, MASK_VERSION, path)
    if i >= len(lines) or lines[i].strip() != "weights:":
        raise LoadError(f"{path}: missing weights section")
    try:
        order = int(header["N"])
        weights = np.array([float(v) for v in lines[i + 1:] if v.strip()])
        seed = None if header.get("seed", "none") == "none" else int(header["seed"])
        mask = InterferenceMask(
            weights,
            center_frequency=float(header["center_frequency_hz"]),
            bandwidth=float(header["bandwidth_hz"]),
            blocks_averaged=int(header["blocks_averaged"]),
            statistic=header["statistic"],
            seed=seed,
        )
    except (KeyError, ValueError) as e:
        raise LoadError(f"{path}: corrupt mask file ({e})") from e
    if weights.size != order:
        raise LoadError(f"{path}: header says N={order} but {weights.size} weights found")
    if expected_order is not None and order != expected_order:
        raise LoadError(f"{path}: dimension error, mask has N={order}, run uses N={expected_order}")
    return mask


# -- models --------------------------------------------------------------------

_MODEL_HEADER = ("version", "k", "N", "M", "seed", "optimizer", "steps", "scenario", "final_relu")


def save_model(model: AutoencoderModel, path) -> None:
    meta = model.meta
    lines = [
        "# walshae autoencoder model",
        f"version: {MODEL_VERSION}",
        f"k: {model.topology.k}",
        f"N: {model.topology.n}",
        f"M: {model.topology.m}",
        f"seed: {meta.get('seed', 'none')}",
        f"optimizer: {meta.get('optimizer', 'none')}",
        f"steps: {meta.get('steps', 0)}",
        f"scenario: {meta.get('scenario', 'none')}",
        f"final_relu: {int(model.final_relu)}",
        f"meta: {json.dumps(meta, sort_keys=True, default=str)}",
    ]
    for name in PARAM_NAMES:
        a = getattr(model, name)
        a2 = a.reshape(1, -1) if a.ndim == 1 else a
        lines.append(f"[{name}] {' '.join(str(s) for s in a.shape)}")
        lines += [" ".join(fmt(v) for v in row) for row in a2]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> AutoencoderModel:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise LoadError(f"{path}: {e}") from e
    header, i = _parse_header(lines, path, "# walshae autoencoder model")
    _check_version(header, MODEL_VERSION, path)
    try:
        topology = Topology(int(header["k"]), int(header["N"]))
        if int(header["M"]) != topology.m:
            raise LoadError(f"{path}: M={header['M']} inconsistent with k={topology.k}")
        meta = json.loads(header.get("meta", "{}"))
        arrays = {}
        while i < len(lines):
            line = lines[i]
            if not line.startswith("["):
                raise LoadError(f"{path}: unexpected line {i + 1}: {line[:40]!r}")
            name, _, dims = line[1:].partition("]")
            shape = tuple(int(d) for d in dims.split())
            nrows = shape[0] if len(shape) == 2 else 1
            rows = [[float(v) for v in r.split()] for r in lines[i + 1: i + 1 + nrows]]
            arr = np.array(rows, dtype=float)
            if arr.size != int(np.prod(shape)):
                raise LoadError(f"{path}: block {name} truncated")
            arrays[name] = arr.reshape(shape)
            i += 1 + nrows
        missing = set(PARAM_NAMES) - set(arrays)
        if missing:
            raise LoadError(f"{path}: missing parameter blocks {sorted(missing)}")
        model = AutoencoderModel(**arrays, topology=topology,
                                 final_relu=bool(int(header.get("final_relu", 0))), meta=meta)
        model.check()
    except LoadError:
        raise
    except (KeyError, ValueError) as e:
        raise LoadError(f"{path}: corrupt model file ({e})") from e
    return model


# -- captures ------------------------------------------------------------------

def _sidecar(path) -> Path:
    return Path(str(path) + ".txt")


def save_capture(capture: RealCapture, path) -> None:
    """Raw little-endian float64 samples plus a ``<path>.txt`` sidecar header."""
    np.asarray(capture.samples, dtype="<f8").tofile(path)
    _sidecar(path).write_text(
        "# walshae capture\n"
        f"version: {CAPTURE_VERSION}\n"
        f"sample_rate: {fmt(capture.sample_rate)}\n"
        f"length: {len(capture.samples)}\n"
        "dtype: float64-le\n"
    )


def load_capture(path) -> RealCapture:
    try:
        lines = _sidecar(path).read_text().splitlines()
    except OSError as e:
        raise LoadError(f"{path}: missing sidecar header ({e})") from e
    header, _ = _parse_header(lines, _sidecar(path), "# walshae capture")
    _check_version(header, CAPTURE_VERSION, path)
    length = int(header["length"])
    data = np.fromfile(path, dtype="<f8")
    if data.size != length:
        raise LoadError(f"{path}: length mismatch, header says {length}, file holds {data.size}")
    return RealCapture(data.astype(float), float(header["sample_rate"]))


# -- results -------------------------------------------------------------------

def results_csv(rows) -> str:
    """Render BLER rows (mappings with the CSV columns) as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_csv_cell(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def save_results(rows, path) -> None:
    Path(path).write_text(results_csv(rows))


def load_results(path) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise LoadError(f"{path}: {e}") from e
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise LoadError(f"{path}: unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        try:
            out.append({
                "scenario": row["scenario"],
                "label": row["label"],
                "fc_hz": float(row["fc_hz"]),
                "ici_db": float(row["ici_db"]),
                "ebn0_db": float(row["ebn0_db"]),
                "blocks": int(row["blocks"]),
                "block_errors": int(row["block_errors"]),
                "bler": float(row["bler"]),
                "ci95": float(row["ci95"]),
            })
        except (TypeError, ValueError) as e:
            raise LoadError(f"{path}: corrupt row {row} ({e})") from e
    return out


# -- manifest ------------------------------------------------------------------

def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config: dict, artifacts, extra: dict | None = None) -> dict:
    """Record the config snapshot and a content hash for every artifact."""
    base = Path(path).parent
    entries = []
    for a in sorted(str(p) for p in artifacts):
        rel = os.path.relpath(a, base)
        entries.append({"path": rel, "sha256": file_sha256(a)})
    manifest = {
        "tool": "walshae",
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": config,
        "artifacts": entries,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def verify_manifest(path) -> dict:
    """Load a manifest and check every artifact exists and matches its hash."""
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise LoadError(f"{path}: unreadable manifest ({e})") from e
    base = Path(path).parent
    for entry in manifest.get("artifacts", []):
        p = base / entry["path"]
        if not p.exists():
            raise LoadError(f"{path}: artifact {entry['path']} missing")
        if file_sha256(p) != entry["sha256"]:
            raise LoadError(f"{path}: hash mismatch for {entry['path']}")
    return manifest
