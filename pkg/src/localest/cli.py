"""Command line runner.

    localest run <config> [--seed S] [--out DIR] [--chains N]
    localest validate <config>
    localest report <chain.csv> <config> [--out DIR]

Exit codes: 0 success, 1 config error, 2 runtime or model error.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import validate_config
from .estimators import estimate_density, full_report
from .models import ModelError, StekloffModel
from .sampler import chain_diagnostics, mh_run, read_chain_csv, write_chain_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def write_histogram_csv(density, path):
    """``bin_center,height,count`` (1-D) or ``bin_center_x,bin_center_y,height,count``."""
    centers = density.centers
    if density.dimension == 1:
        header = ["bin_center", "height", "count"]
    else:
        header = ["bin_center_x", "bin_center_y", "height", "count"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for index in np.ndindex(density.counts.shape):
            row = [repr(float(centers[a][i])) for a, i in enumerate(index)]
            row += [repr(float(density.heights[index])), str(int(density.counts[index]))]
            writer.writerow(row)


def _fmt_point(x):
    return "(" + ", ".join(f"{v:.4f}" for v in np.atleast_1d(x)) + ")"


def _fmt_forward(values, model):
    if values is None:
        return "n/a"
    if isinstance(model, StekloffModel):
        return f"lambda* = {values[0]:.4f}"
    return "F = [" + ", ".join(f"{v:.4g}" for v in values[:4]) + (", ..." if len(values) > 4 else "") + "]"


def format_summary(report, model, diagnostics=None):
    lines = []
    if diagnostics is not None:
        lines.append(
            f"iterations {diagnostics['iterations']}  post-burn-in {diagnostics['post_burn_in']}  "
            f"acceptance {diagnostics['acceptance_rate']:.4f}"
        )
    lines.append(f"MAP  {_fmt_point(report.map)}  {_fmt_forward(report.map_forward, model)}")
    lines.append(f"CM   {_fmt_point(report.cm)}  {_fmt_forward(report.cm_forward, model)}")
    lines.append("LMAPs " + " ".join(_fmt_point(p) for p in report.lmaps))
    for i, loc in enumerate(report.regions, 1):
        fc = loc.forward_check or {}
        lines.append(
            f"region {i}  [{_fmt_point(loc.region.lo)} .. {_fmt_point(loc.region.hi)})  mass {loc.mass:.3f}"
        )
        lines.append(f"    LMAP {_fmt_point(loc.lmap)}  {_fmt_forward(fc.get('lmap'), model)}")
        lines.append(f"    LCM  {_fmt_point(loc.lcm)}  {_fmt_forward(fc.get('lcm'), model)}")
    return "\n".join(lines)


def analyse(cfg, chain):
    density = estimate_density(chain, cfg.bins, cfg.prior)
    report = full_report(
        chain,
        density,
        epsilon=cfg.epsilon,
        min_separation=cfg.min_separation,
        regions=cfg.regions,
        model=cfg.model,
    )
    return density, report


def run_chain(cfg, seed, out_dir):
    """Sample, estimate and write ``chain.csv``, ``histogram.csv``, ``report.json``."""
    data = cfg.observation()
    like = cfg.likelihood(data)
    chain = mh_run(
        cfg.model, cfg.prior, like, data, cfg.K, burn_in=cfg.burn_in, seed=seed, initial=cfg.initial
    )
    density, report = analyse(cfg, chain)
    os.makedirs(out_dir, exist_ok=True)
    write_chain_csv(chain, os.path.join(out_dir, "chain.csv"))
    write_histogram_csv(density, os.path.join(out_dir, "histogram.csv"))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.to_json())
    return format_summary(report, cfg.model, chain_diagnostics(chain))


def _run_chain_job(args):
    path, seed, out_dir = args
    cfg, _ = validate_config(path)
    return run_chain(cfg, seed, out_dir)


def _load(path):
    cfg, errors = validate_config(path)
    for err in errors:
        print(f"config error: {err}", file=sys.stderr)
    return cfg


def cmd_validate(args):
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    print(f"{args.config}: valid")
    return EXIT_OK


def cmd_run(args):
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    if args.chains < 1:
        print("config error: --chains must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.seed if args.seed is None else args.seed
    out_dir = args.out or cfg.output_dir
    try:
        if args.chains == 1:
            print(run_chain(cfg, seed, out_dir))
        else:
            jobs = [
                (cfg.source_path, seed + i, os.path.join(out_dir, f"chain_{i}"))
                for i in range(args.chains)
            ]
            with ProcessPoolExecutor(max_workers=args.chains) as pool:
                for (_, s, d), summary in zip(jobs, pool.map(_run_chain_job, jobs)):
                    print(f"== chain seed {s} -> {d}")
                    print(summary)
    except (ModelError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args):
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    try:
        chain = read_chain_csv(args.chain, burn_in=cfg.burn_in)
        if chain.dim != cfg.prior.dim:
            raise ValueError(f"chain has {chain.dim} coordinates, config prior has {cfg.prior.dim}")
        density, report = analyse(cfg, chain)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            write_histogram_csv(density, os.path.join(args.out, "histogram.csv"))
            with open(os.path.join(args.out, "report.json"), "w") as fh:
                fh.write(report.to_json())
    except (ModelError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(format_summary(report, cfg.model, chain_diagnostics(chain)))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="localest", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="sample a posterior and write chain, histogram and report")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="override sampler.seed")
    p.add_argument("--out", default=None, help="override output.dir")
    p.add_argument("--chains", type=int, default=1, help="independent chains (seeds S, S+1, ...)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config and list every problem")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="re-run the estimators on an existing chain.csv")
    p.add_argument("chain")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="write histogram.csv and report.json here")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
