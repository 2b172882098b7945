"""Command-line entry point: ``awnmf {table,sweep,dump-repr,trace}``."""

from __future__ import annotations

import argparse
import logging
import sys

import yaml

from . import bench
from .errors import AwnmfError, ConfigError


def _add_common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="row-per-sample CSV file")
    src.add_argument("--synthetic", metavar="M,L,N,OUTLIERS",
                     help="planted-factor synthetic data (default 20,2,30,3)")
    p.add_argument("--label-col", help="label column index or header name (default -1)")
    p.add_argument("--drop-cols", help="comma list of columns to ignore, e.g. an id column")
    p.add_argument("--delimiter", help="CSV delimiter (default ',')")
    p.add_argument("--methods", help="comma list of EucNMF,FWRNMF,EWRNMF (default all)")
    p.add_argument("--restarts", type=int, help="random restarts per grid value (default 10)")
    p.add_argument("--noise", help="noise level c, or a comma list (default 0.05)")
    p.add_argument("--p-grid", help="comma list of p values (default 1.5,2,...,11)")
    p.add_argument("--gamma-grid", help="comma list of gamma values (default 1e-4,...,1e4)")
    p.add_argument("--rank", help="'classes' or an explicit rank L (default classes)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--max-iter", type=int, help="NMF iteration cap (default 500)")
    p.add_argument("--tol", type=float, help="relative objective tolerance (default 1e-6)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="YAML or JSON config file; flags override it")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="awnmf", description="Adaptive weighted robust NMF benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="restart-averaged ACC/NMI per method")
    _add_common(p)

    p = sub.add_parser("sweep", help="ACC/NMI curves along noise, cluster count or hyperparameter")
    _add_common(p)
    p.add_argument("--axis", required=True,
                   choices=["noise", "noise_c", "clusters", "cluster_count", "hyper"])
    p.add_argument("--values", help="comma list of axis values (noise: --noise list; "
                                    "clusters: 2..10)")

    p = sub.add_parser("dump-repr", help="2-D representation H with true/predicted labels")
    _add_common(p)

    p = sub.add_parser("trace", help="objective value per iteration for each method")
    _add_common(p)
    return parser


_CONFIG_KEYS = ["data", "synthetic", "label_col", "drop_cols", "delimiter", "methods",
                "restarts", "noise", "p_grid", "gamma_grid", "rank", "seed", "max_iter",
                "tol", "jobs", "out"]


def config_from_args(args):
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    # a source given on the command line replaces one from the file
    if args.data is not None:
        values.pop("synthetic", None)
    if args.synthetic is not None:
        values.pop("data", None)
    if isinstance(values.get("label_col"), str) and values["label_col"].lstrip("-").isdigit():
        values["label_col"] = int(values["label_col"])
    return bench.ExperimentConfig.from_dict(values)


def _pct(x):
    return f"{100 * x:6.2f}"


def _hyper(name, value):
    return "-" if value is None else f"{name}={value:g}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        if args.command == "table":
            res = bench.run_table(config)
            print(f"{'method':8s} {'hyper':14s} {'ACC%':>6s} {'NMI%':>6s}")
            for p in res.rows:
                print(f"{p.method:8s} {_hyper(p.hyper_name, p.hyper):14s} "
                      f"{_pct(p.mean_acc)} {_pct(p.mean_nmi)}")
        elif args.command == "sweep":
            values = bench._as_list(args.values) if args.values else None
            curve, _ = bench.run_sweep(config, args.axis, values)
            print(f"{'axis':8s} {'value':>10s} {'method':8s} {'hyper':14s} {'ACC%':>6s} {'NMI%':>6s}")
            for p in curve:
                print(f"{p.axis:8s} {p.value:10g} {p.method:8s} "
                      f"{_hyper(p.hyper_name, p.hyper):14s} {_pct(p.mean_acc)} {_pct(p.mean_nmi)}")
        elif args.command == "dump-repr":
            dumps = bench.dump_representation(config)
            for method, rows in dumps.items():
                print(f"{method}: {len(rows)} samples")
        elif args.command == "trace":
            traces = bench.dump_trace(config)
            for name, t in traces.items():
                print(f"{name}: {len(t)} iterations, final objective {t[-1]:.6g}")
    except AwnmfError as exc:
        print(f"awnmf: error: {exc}", file=sys.stderr)
        return 2
    if config.out:
        print(f"results written to {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
