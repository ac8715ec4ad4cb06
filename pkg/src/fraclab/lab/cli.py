"""``fraclab <experiment> [--config PATH] [overrides]``.

Writes ``<out>/<experiment>.dat``, ``<out>/<experiment>.csv`` and
``<out>/summary.txt``.  Exit status is 0 when every verdict passes, 1 when
some verdict fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, RHS_CHOICES, ConfigError, build_config, parse_s_grid
from .experiments import run_experiment, write_summary

log = logging.getLogger("fraclab")


def build_parser():
    ap = argparse.ArgumentParser(prog="fraclab", description="Fractional Laplacian FE experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS + ("all",))
    ap.add_argument("--config", help="key = value file; command-line flags win")
    ap.add_argument("--n", type=int, help="interior nodes")
    ap.add_argument("--s-grid", type=parse_s_grid, help="comma or space separated orders")
    ap.add_argument("--rhs", choices=RHS_CHOICES)
    ap.add_argument("--out", help="output directory (default: results)")
    ap.add_argument("--dt", type=float)
    ap.add_argument("--T", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    names = EXPERIMENTS if args.experiment == "all" else (args.experiment,)
    overrides = dict(n=args.n, s_grid=args.s_grid, rhs=args.rhs, out=args.out,
                     dt=args.dt, T=args.T, seed=args.seed)
    try:
        configs = [build_config(name, args.config, **overrides) for name in names]
    except (ConfigError, OSError) as exc:
        print(f"fraclab: {exc}", file=sys.stderr)
        return 2

    summaries = []
    for cfg in configs:
        log.info("running %s (n=%d, %d orders)", cfg.experiment, cfg.n, len(cfg.s_grid))
        try:
            summary = run_experiment(cfg)
        except ValueError as exc:
            print(f"fraclab: {cfg.experiment}: {exc}", file=sys.stderr)
            return 2
        log.info("%s finished in %.2f s", cfg.experiment, summary.wall_time)
        summaries.append(summary)
        for line in summary.lines():
            print(f"{cfg.experiment}: {line}")
    # all experiments share one out directory unless configured otherwise
    by_out = {}
    for cfg, summary in zip(configs, summaries):
        by_out.setdefault(cfg.out, []).append(summary)
    for out, group in by_out.items():
        write_summary(out, group)
    return 0 if all(s.passed for s in summaries) else 1


if __name__ == "__main__":
    sys.exit(main())
