"""Command-line front end: bounds | simulate | tune | szego | trace."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bounds import (
    lower_bound_trajectory,
    renyi_log_moment,
    szego_rate,
    szego_rate_printed,
    upper_bound_trajectory,
)
from .channel import derive_seed, random_trace
from .config import ExperimentConfig
from .decoder import run_campaign
from .errors import ConvergenceError, DomainError, FeasibilityError
from .tuner import bound_traces, grid_search

log = logging.getLogger("vlsf")

EXIT_CONFIG = 2
EXIT_FEASIBILITY = 3
EXIT_CONVERGENCE = 4


def _num(x) -> str:
    """Shortest round-trip text for a float, whatever its numpy type."""
    return repr(float(x))


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, extra=None):
    manifest = {"command": command, "version": __version__, "config": cfg.to_dict()}
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    cfg.dump(out / "config.yaml")


def _resolve_reference(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.has_reference:
        return cfg
    log.info("no explicit (r, sigma_h2); running the grid search")
    best = grid_search(cfg.grid(), cfg.channel()).best
    log.info("using tuned r=%g sigma_h2=%g", best.r, best.sigma_h2)
    return cfg.override(r=best.r, sigma_h2=best.sigma_h2)


def cmd_bounds(cfg: ExperimentConfig, out: Path):
    cfg = _resolve_reference(cfg)
    ch, ref = cfg.channel(), cfg.reference()
    traces = bound_traces(ch, cfg.n_eval, cfg.trace_count, cfg.master_seed)
    tdir = out / "traces"
    tdir.mkdir(exist_ok=True)
    psi_sum = np.zeros(cfg.n_eval)
    phi_sum = np.zeros(cfg.n_eval)
    for i, t in enumerate(traces):
        lo = lower_bound_trajectory(t.x, t.y, ref, ch)
        up = upper_bound_trajectory(t.x, t.y, ref.sigma_h2, ch, log_cond=lo.log_cond)
        psi_sum += lo.value
        phi_sum += up.value
        fh, w = _writer(tdir / f"trace_{i:04d}.csv")
        with fh:
            w.writerow(["n", "log_cond", "envelope", "penalty", "value", "kind"])
            w.writerows(lo.rows())
            w.writerows(up.rows())
    fh, w = _writer(out / "bounds_mean.csv")
    with fh:
        w.writerow(["n", "mean_psi", "mean_phi"])
        for n in range(cfg.n_eval):
            w.writerow([n + 1, _num(psi_sum[n] / len(traces)), _num(phi_sum[n] / len(traces))])
    write_manifest(out, "bounds", cfg)
    log.info("mean psi(n=%d)=%.4f mean phi=%.4f", cfg.n_eval,
             psi_sum[-1] / len(traces), phi_sum[-1] / len(traces))


def cmd_simulate(cfg: ExperimentConfig, out: Path):
    cfg = _resolve_reference(cfg)
    dec = cfg.decoder()
    stats = run_campaign(dec, cfg.trials, cfg.master_seed, workers=cfg.workers,
                         keep_trajectories=cfg.sample_trajectories)
    stats.write_csv(out / "tau_histogram.csv", out / "summary.csv")
    tdir = out / "trajectories"
    tdir.mkdir(exist_ok=True)
    for i, rec in enumerate(stats.records[: cfg.sample_trajectories]):
        fh, w = _writer(tdir / f"trajectory_{i:04d}.csv")
        with fh:
            w.writerow(["n", "psi", "gamma", "outcome"])
            for n, v in enumerate(rec.trajectory, start=1):
                w.writerow([n, _num(v), _num(dec.gamma), rec.outcome.value])
    write_manifest(out, "simulate", cfg, {"gamma": dec.gamma, "outcomes": stats.outcomes})
    log.info("trials=%d errors=%d truncations=%d mean_tau=%.2f CI95=[%.3g, %.3g]",
             stats.trials, stats.errors, stats.truncations, stats.mean_tau, *stats.ci)


def cmd_tune(cfg: ExperimentConfig, out: Path):
    res = grid_search(cfg.grid(), cfg.channel())
    res.to_csv(out / "tune_table.csv")
    best = res.best
    write_manifest(out, "tune", cfg, {"best": {"r": best.r, "sigma_h2": best.sigma_h2, "score": best.score}})
    print(f"r={best.r!r} sigma_h2={best.sigma_h2!r} score={best.score!r}")


def cmd_szego(cfg: ExperimentConfig, out: Path):
    ref = cfg.reference()
    limit = szego_rate(cfg.rho, ref.sigma_h2, ref.r)
    printed = szego_rate_printed(cfg.rho, ref.sigma_h2, ref.r)
    diverges = abs(printed - limit) > 1e-9 * max(1.0, abs(limit))
    fh, w = _writer(out / "szego.csv")
    with fh:
        w.writerow(["n", "rate", "limit", "rel_gap", "printed_limit", "printed_diverges"])
        for n in sorted(int(v) for v in cfg.szego_n):
            rate = renyi_log_moment(n, cfg.rho, ref.sigma_h2, ref.r) / n
            gap = abs(rate - limit) / abs(limit) if limit else abs(rate - limit)
            w.writerow([n, _num(rate), _num(limit), _num(gap), _num(printed), int(diverges)])
    write_manifest(out, "szego", cfg)
    if diverges:
        log.warning("alternative integrand gives %.6g, exact limit is %.6g", printed, limit)


def cmd_trace(cfg: ExperimentConfig, out: Path):
    trace = random_trace(cfg.n_max, cfg.channel(), derive_seed(cfg.master_seed, 0))
    trace.to_csv(out / "trace.csv")
    write_manifest(out, "trace", cfg)


COMMANDS = {
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "tune": cmd_tune,
    "szego": cmd_szego,
    "trace": cmd_trace,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vlsf", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--seed", type=int, help="master seed (u64)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--trials", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, value parsed as YAML")
    p.add_argument("--quiet", action="store_true")
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    extra = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"--set expects KEY=VALUE, got {item!r}")
        extra[key.strip()] = yaml.safe_load(value)
    extra.update(master_seed=args.seed, trials=args.trials,
                 out_dir=str(args.out) if args.out else None)
    return cfg.override(**extra)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
    except FeasibilityError as exc:
        log.error("%s", exc)
        return EXIT_FEASIBILITY
    except ConvergenceError as exc:
        log.error("%s (last estimates %s)", exc, exc.estimates)
        return EXIT_CONVERGENCE
    except (DomainError, OSError, yaml.YAMLError, TypeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
