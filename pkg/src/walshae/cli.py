"""Command-line entry point: ``walshae <subcommand> [flags]``.

Results go to files under ``--out`` (or ``$WALSHAE_OUT``), progress to
stderr. Exit status: 0 on success, 2 for configuration errors, 3 for
runtime or numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evaluation as ev
from . import persist
from .config import ConfigError, RunConfig, default_config, load_config
from .experiments import FS4, NEAR_FS2, Lab, concentration_sweep, derive_seed, rows_for

log = logging.getLogger("walshae")

FIGURES = (3, 4, 5, 6, 7, 8, 9)


class Run:
    """One CLI invocation: config, output directory and the artifacts written so far."""

    def __init__(self, cfg: RunConfig, out: Path, workers: int, stream_csv: bool):
        self.cfg = cfg
        self.out = out
        self.workers = workers
        self.stream_csv = stream_csv
        self.artifacts: list[Path] = []
        self.censored = False
        self.lab = Lab(
            topology=cfg.topology,
            training=cfg.training,
            ofdm=cfg.ofdm,
            seed=cfg.seed,
            fingerprint_blocks=cfg.fingerprint["blocks"],
            statistic=cfg.fingerprint["statistic"],
            system_sample_rate=cfg.placements[0].system_sample_rate if cfg.placements else 5e9,
        )
        out.mkdir(parents=True, exist_ok=True)

    @property
    def ev_kw(self):
        e = self.cfg.evaluation
        return {"min_errors": e["min_errors"], "max_blocks": e["max_blocks"], "workers": self.workers}

    def path(self, name) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write_text(self, name, text):
        p = self.path(name)
        p.write_text(text)
        self.artifacts.append(p)
        if self.stream_csv and name.endswith(".csv"):
            sys.stdout.write(text)
        return p

    def write_rows(self, name, rows):
        if any(r["blocks"] and r["block_errors"] == 0 for r in rows):
            self.censored = True
        return self.write_text(name, persist.results_csv(rows))

    def write_table(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        return self.write_text(name, buf.getvalue())

    def finish(self, command):
        persist.write_manifest(self.out / f"manifest-{command}.json", self.cfg.raw, self.artifacts,
                               extra={"command": command, "seed": self.cfg.seed})

    def mask_for_channel(self):
        if self.cfg.mask_file:
            return persist.load_mask(self.cfg.mask_file, expected_order=self.cfg.topology.n)
        if self.cfg.interference_fc_hz is not None:
            return self.lab.mask(self.cfg.interference_fc_hz)
        return None


# -- subcommands ---------------------------------------------------------------

def cmd_fingerprint(run: Run, args):
    cfg = run.cfg
    freqs = [p.center_frequency for p in cfg.placements]
    for fc in freqs:
        mask = run.lab.mask(fc)
        name = f"masks/mask_{fc / 1e6:g}MHz.txt"
        persist.save_mask(mask, run.path(name))
        run.artifacts.append(run.path(name))
    sub = [f * 1e6 for f in cfg.fingerprint["submultiple_frequencies_mhz"]]
    _concentration_csv(run, "concentration.csv", freqs + [f for f in sub if f not in freqs])


def _concentration_csv(run: Run, name, freqs):
    reports = concentration_sweep(freqs, run.lab, run.cfg.fingerprint["blocks"],
                                  run.cfg.fingerprint["normalization"])
    run.write_table(name, ("fc_hz", "mad_from_peak", "peak_branch", "peak_power_fraction", "blocks"),
                    [(r.center_frequency, r.mad_from_peak, r.peak_branch_index,
                      float(r.per_branch_power.max() / r.per_branch_power.sum()), r.blocks)
                     for r in reports])
    return reports


def _profiles_csv(run: Run, name, reports):
    rows = []
    for r in reports:
        for i, (pw, pk) in enumerate(zip(r.per_branch_power, r.per_branch_peak)):
            rows.append((r.center_frequency, i, pw, pk))
    run.write_table(name, ("fc_hz", "branch", "mean_power", "peak_amplitude"), rows)


def _trained_model(run: Run):
    mask = run.mask_for_channel()
    if run.cfg.ici_db != 0:
        fc = mask.center_frequency
        model = run.lab._train(("aware-config", run.cfg.ici_db), 1, ici_db=run.cfg.ici_db, mask=mask,
                               scenario_id=f"aware@{fc / 1e6:g}MHz/ici{run.cfg.ici_db:g}")
    else:
        model = run.lab.baseline()
    return model, mask


def cmd_train(run: Run, args):
    model, _ = _trained_model(run)
    name = "models/model.txt"
    persist.save_model(model, run.path(name))
    run.artifacts.append(run.path(name))


def cmd_bler(run: Run, args):
    cfg = run.cfg
    if args.model:
        model = persist.load_model(args.model)
        mask = run.mask_for_channel()
    else:
        model, mask = _trained_model(run)
    trained_ici = float(model.meta.get("ici_db", 0.0) or 0.0)
    if cfg.ici_db == 0:
        label = "baseline"
    else:
        label = "ici-aware-model" if trained_ici != 0 else "ici-unaware-model"
    fc = mask.center_frequency if mask is not None else float("nan")
    sc = ev.ScenarioSpec(model, label, mask if cfg.ici_db else None, cfg.ici_db,
                         cfg.evaluation["ebn0_grid_db"], center_frequency=fc)
    pts = ev.bler_curve(sc, [float(e) for e in cfg.evaluation["ebn0_grid_db"]],
                        derive_seed(cfg.seed, "eval"), **run.ev_kw)
    run.write_rows("bler.csv", rows_for(sc, pts))


def cmd_freq_sweep(run: Run, args):
    _freq_sweep(run, [f * 1e6 for f in run.cfg.evaluation["sweep_frequencies_mhz"]],
                [float(e) for e in run.cfg.evaluation["ebn0_grid_db"]], "freq_sweep")


def _freq_sweep(run: Run, freqs, grid, stem):
    ici = float(run.cfg.evaluation["ici_db"])
    models = {fc: run.lab.aware(fc, ici) for fc in freqs}
    masks = {fc: run.lab.mask(fc) for fc in freqs}
    res = ev.frequency_sweep(models, masks, freqs, ici, grid, derive_seed(run.cfg.seed, "eval"), **run.ev_kw)
    rows = []
    for fc, p in res.rows:
        sc = ev.ScenarioSpec(models[fc], "ici-aware-model", masks[fc], ici, grid, center_frequency=fc)
        rows += rows_for(sc, [p])
    run.write_rows(f"{stem}.csv", rows)
    run.write_table(f"{stem}_gradient.csv", ("ebn0_db", "slope_per_mhz", "r2"),
                    [(e, g[0], g[1]) for e, g in sorted(res.gradients.items())])


def cmd_ici_sweep(run: Run, args):
    _ici_sweep(run, [f * 1e6 for f in run.cfg.evaluation["rejection_frequencies_mhz"]], "ici_sweep")


def _ici_sweep(run: Run, freqs, stem):
    e = run.cfg.evaluation
    masks = {fc: run.lab.mask(fc) for fc in freqs}
    res = ev.ici_rejection_sweep(
        lambda fc, lvl: [run.lab.aware(fc, lvl, int(m)) for m in e["ensemble_seeds"]], masks, freqs, float(e["target_bler"]),
        float(run.cfg.channel.ebn0_db), [float(x) for x in e["ici_grid_db"]],
        derive_seed(run.cfg.seed, "eval"), **run.ev_kw,
    )
    run.write_table(f"{stem}.csv", ("fc_hz", "max_ici_db", "target_bler", "ebn0_db"),
                    [(r.center_frequency, "none" if r.max_ici_db is None else r.max_ici_db,
                      r.target_bler, r.ebn0_db) for r in res])
    rows = []
    for r in res:
        for lvl, p in sorted(r.points.items()):
            rows.append({"scenario": f"aware@{r.center_frequency / 1e6:g}MHz/ici{lvl:g}",
                         "label": "ici-aware-model", "fc_hz": r.center_frequency, "ici_db": lvl,
                         "ebn0_db": p.ebn0_db, "blocks": p.blocks, "block_errors": p.block_errors,
                         "bler": p.bler, "ci95": p.ci95_halfwidth})
    run.write_rows(f"{stem}_points.csv", rows)


def _curves(run: Run, near: float, far: float, stem: str):
    ici = float(run.cfg.evaluation["ici_db"])
    grid = [float(x) for x in run.cfg.evaluation["ebn0_grid_db"]]
    seed = derive_seed(run.cfg.seed, "eval")
    scenarios = []
    for member in run.cfg.evaluation["ensemble_seeds"]:
        member = int(member)
        scenarios.append(run.lab.baseline_scenario(member, grid=grid))
        for fc in (near, far):
            scenarios.append(run.lab.unaware_scenario(fc, ici, member, grid=grid))
            scenarios.append(run.lab.aware_scenario(fc, ici, member, grid=grid))
    rows = []
    for sc in scenarios:
        rows += rows_for(sc, ev.bler_curve(sc, grid, seed, **run.ev_kw))
    run.write_rows(f"{stem}.csv", rows)


def cmd_reproduce_figure(run: Run, args):
    fig = args.figure if args.figure is not None else args.figure_pos
    if fig not in FIGURES:
        raise ConfigError([f"--figure: must be one of {FIGURES}, got {fig}"])
    stem = f"figure{fig}"
    if fig == 3:
        freqs = [2475e6 - 100e6 * i for i in range(5)]
        _profiles_csv(run, f"{stem}_profiles.csv", _concentration_csv(run, f"{stem}.csv", freqs))
    elif fig == 4:
        freqs = [1250e6 + 100e6 * i for i in range(5)]
        _profiles_csv(run, f"{stem}_profiles.csv", _concentration_csv(run, f"{stem}.csv", freqs))
    elif fig == 5:
        freqs = [f * 1e6 for f in run.cfg.fingerprint["submultiple_frequencies_mhz"]]
        _profiles_csv(run, f"{stem}_profiles.csv", _concentration_csv(run, f"{stem}.csv", freqs))
    elif fig == 6:
        _curves(run, NEAR_FS2, NEAR_FS2 - 400e6, stem)
    elif fig == 7:
        _curves(run, FS4, FS4 + 400e6, stem)
    elif fig == 8:
        _freq_sweep(run, [f * 1e6 for f in run.cfg.evaluation["sweep_frequencies_mhz"]],
                    [7.0, 8.0, 9.0], stem)
    elif fig == 9:
        _ici_sweep(run, [f * 1e6 for f in run.cfg.evaluation["rejection_frequencies_mhz"]], stem)


COMMANDS = {
    "fingerprint": cmd_fingerprint,
    "train": cmd_train,
    "bler": cmd_bler,
    "freq-sweep": cmd_freq_sweep,
    "ici-sweep": cmd_ici_sweep,
    "reproduce-figure": cmd_reproduce_figure,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (default: built-in scenario)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--out", help="output directory (default: run.output_dir or $WALSHAE_OUT)")
    common.add_argument("--workers", type=int, help="evaluation worker threads")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--stdout-csv", action="store_true", help="also stream emitted CSVs to stdout")
    p = argparse.ArgumentParser(prog="walshae", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "bler":
            sp.add_argument("--model", help="saved model to evaluate instead of training one")
        if name == "reproduce-figure":
            sp.add_argument("figure_pos", nargs="?", type=int, metavar="FIGURE")
            sp.add_argument("--figure", type=int, choices=FIGURES)
    return p


def _resolve(args) -> tuple[RunConfig, Path, int]:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(["--seed: must be non-negative"])
        cfg.seed = args.seed
        cfg.training = replace(cfg.training, seed=args.seed)
        cfg.raw["run"]["seed"] = args.seed
    out = args.out or os.environ.get("WALSHAE_OUT") or cfg.output_dir
    workers = args.workers if args.workers is not None else cfg.workers
    if workers < 1:
        raise ConfigError(["--workers: must be >= 1"])
    return cfg, Path(out), workers


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg, out, workers = _resolve(args)
        if args.command == "reproduce-figure" and args.figure is None and args.figure_pos is None:
            raise ConfigError(["--figure: required"])
        run = Run(cfg, out, workers, args.stdout_csv)
        COMMANDS[args.command](run, args)
        run.finish(args.command)
    except (ConfigError, persist.LoadError) as e:
        print(f"error: kind=config command={args.command} message={e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"error: kind=runtime command={args.command} message={type(e).__name__}: {e}", file=sys.stderr)
        return 3
    if run.censored:
        log.warning("some BLER points are censored (no errors observed)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
