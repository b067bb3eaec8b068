"""Command-line entry point: ``frislab run|fit|oracle|compare``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .channel import correlation_matrix, covariance_factor, sample_channels
from .config import emit_curve, format_curve, parse_config
from .epso import bf_ps_fitness, epso_optimize, exhaustive_select, spo_fitness
from .exceptions import FrislabError
from .geometry import build_preset_grid
from .harness import binomial_se, mc_outage, run_scenario, run_trials
from .link import random_phases, uniform_beamformer
from .mixture import TrainingSet, analytic_op, as_mixture, em_fit, ks_fit, ks_statistic, mom_fit

log = logging.getLogger("frislab")


def _load_spec(path, args):
    spec = parse_config(path)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    return dataclasses.replace(spec, **changes) if changes else spec


def cmd_run(args):
    spec = _load_spec(args.config, args)
    curve = run_scenario(spec, threads=args.threads)
    if args.out:
        emit_curve(curve, args.out)
        log.info("wrote %s (%d points, %.1f s)", args.out, len(curve.points), curve.wall_time_s)
    else:
        sys.stdout.write(format_curve(curve))
    return 3 if curve.truncated else 0


def cmd_fit(args):
    data = TrainingSet.load(args.samples)
    rng = np.random.default_rng(args.seed)
    out = {"samples": len(data)}
    models = {}
    for method in args.methods.split(","):
        method = method.strip()
        if method == "em":
            models["em"] = em_fit(data, args.components, args.tol, rng)
        elif method == "mom":
            models["mom"] = as_mixture(mom_fit(data), label="mom")
        elif method == "ks":
            models["ks"] = as_mixture(ks_fit(data), label="ks")
        else:
            raise FrislabError(f"unknown fit method {method!r}")
    for name, model in models.items():
        out[name] = {
            "components": [dataclasses.asdict(c) for c in model.components],
            "ks_statistic": ks_statistic(data, model),
        }
        if args.gamma_db is not None:
            out[name]["outage"] = float(analytic_op(model, 10 ** (args.gamma_db / 10), args.rate))
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_oracle(args):
    spec = _load_spec(args.config, args)
    cfg = spec.surface
    grid = build_preset_grid(cfg)
    factor = covariance_factor(correlation_matrix(grid.coords, cfg.wavelength_m, spec.arg_scale), spec.jitter)
    rows, hits = [], 0
    for k in range(args.instances):
        rng = np.random.default_rng([spec.master_seed, k])
        channels = sample_channels(factor, spec.pathloss, spec.num_bs_antennas, rng)
        if spec.architecture == "fris_spo_bf_ps":
            fitness = bf_ps_fitness(channels, spec.altopt)
        else:
            fitness = spo_fitness(channels, random_phases(cfg.num_active, rng), uniform_beamformer(spec.num_bs_antennas))
        best_sel, best = exhaustive_select(grid, cfg, fitness, cap=args.cap)
        found = epso_optimize(grid, cfg, spec.epso, fitness, rng=rng)
        match = found.fitness >= best * (1 - 1e-9)
        hits += match
        rows.append({
            "instance": k,
            "exhaustive": list(best_sel.preset_indices),
            "exhaustive_fitness": best,
            "epso": list(found.selection.preset_indices),
            "epso_fitness": found.fitness,
            "match": bool(match),
        })
    json.dump({"instances": rows, "match_rate": hits / max(args.instances, 1)}, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_compare(args):
    a = _load_spec(args.config, args)
    b = _load_spec(args.other, args)
    b = dataclasses.replace(b, master_seed=a.master_seed, trials=a.trials)
    za, ta = run_trials(a, range(a.trials), args.threads)
    zb, tb = run_trials(b, range(b.trials), args.threads)
    n = min(len(za), len(zb))
    za, zb = za[:n], zb[:n]
    lines = [
        f"# a: {args.config} ({a.architecture})",
        f"# b: {args.other} ({b.architecture})",
        f"# paired trials: {n}",
        f"# fraction z_a >= z_b: {np.mean(za >= zb):.12e}",
        f"# fraction z_a <= z_b: {np.mean(za <= zb):.12e}",
        "gamma_bar_db,op_a,op_b,op_diff,pooled_se",
    ]
    grid = sorted(set(a.gamma_bar_grid_db) | set(b.gamma_bar_grid_db))
    for g_db in grid:
        g = 10 ** (g_db / 10)
        pa, pb = mc_outage(za, g, a.rate), mc_outage(zb, g, b.rate)
        se = float(np.hypot(binomial_se(pa, n), binomial_se(pb, n)))
        lines.append(f"{g_db:.12e},{pa:.12e},{pb:.12e},{pa - pb:.12e},{se:.12e}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 3 if (ta or tb) else 0


def build_parser():
    p = argparse.ArgumentParser(prog="frislab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, threads=True):
        sp.add_argument("--config", required=True, help="scenario file")
        sp.add_argument("--seed", type=int, help="override master_seed")
        sp.add_argument("--trials", type=int, help="override the number of Monte Carlo trials")
        if threads:
            sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                            help="worker processes (default: available cores)")

    run = sub.add_parser("run", help="simulate a scenario and write its outage curve")
    common(run)
    run.add_argument("--out", help="curve file (default: standard output)")
    run.set_defaults(func=cmd_run)

    fit = sub.add_parser("fit", help="fit mixtures to a one-magnitude-per-line samples file")
    fit.add_argument("samples")
    fit.add_argument("--components", type=int, default=2)
    fit.add_argument("--tol", type=float, default=1e-3)
    fit.add_argument("--methods", default="em,mom,ks")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--gamma-db", type=float, help="also report the outage probability at this SNR")
    fit.add_argument("--rate", type=float, default=1.0)
    fit.set_defaults(func=cmd_fit)

    oracle = sub.add_parser("oracle", help="exhaustive search vs E-PSO on small surfaces")
    common(oracle, threads=False)
    oracle.add_argument("--instances", type=int, default=10)
    oracle.add_argument("--cap", type=int, default=1_000_000)
    oracle.set_defaults(func=cmd_oracle)

    cmp_ = sub.add_parser("compare", help="paired comparison of two scenarios under shared trial seeds")
    common(cmp_)
    cmp_.add_argument("other", help="second scenario file")
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (FrislabError, ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write("error: " + json.dumps(err) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
