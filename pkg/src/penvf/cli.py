"""Command line entry point: ``penvf run | trace-penalty | fetch-data | list-datasets``.

Settings are layered: built-in defaults, then command-line flags, then the
``--config`` file (a flat JSON object), which wins over flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench.config import ExperimentConfig
from .bench.datasets import BUNDLED, REMOTE, fetch_data, list_datasets
from .bench.harness import penalty_gap_trace, run_experiment
from .bench.report import emit_report, write_trace
from .errors import PenvfError


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v]


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v]


def _strs(s: str) -> list[str]:
    return [v for v in s.split(",") if v]


def _add_experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat JSON config; its keys override flags")
    p.add_argument("--dataset", type=_strs, dest="datasets", help="comma-separated dataset names")
    p.add_argument("--learner", choices=("cart", "svr"))
    p.add_argument("--m", type=int)
    p.add_argument("--V", type=_ints)
    p.add_argument("--alpha", type=_floats)
    p.add_argument("--methods", type=_strs)
    p.add_argument("--realisations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--loss", choices=("mae", "mse"))
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--jobs", type=int, dest="n_jobs")
    p.add_argument("--out", default="results")


FLAG_KEYS = ("datasets", "learner", "m", "V", "alpha", "methods", "realisations", "seed", "loss",
             "data_dir", "n_jobs")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    doc = {k: getattr(args, k) for k in FLAG_KEYS if getattr(args, k, None) is not None}
    if args.config:
        doc.update(json.loads(Path(args.config).read_text()))
    return ExperimentConfig.from_dict(doc)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="penvf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a model-selection experiment")
    _add_experiment_flags(run)
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    trace = sub.add_parser("trace-penalty", help="ideal vs V-fold penalties per grid point")
    _add_experiment_flags(trace)
    trace.add_argument("--fold", type=int, default=None, help="fold count (default: first of --V)")
    trace.add_argument("--multiplier", type=float, default=1.0, help="PenVF multiplier alpha")
    trace.add_argument("--svg", action="store_true", help="also write an SVG line chart")

    fetch = sub.add_parser("fetch-data", help="download and convert a benchmark dataset")
    fetch.add_argument("name", choices=sorted(REMOTE))
    fetch.add_argument("--data-dir", dest="data_dir")

    sub.add_parser("list-datasets", help="list bundled and fetchable datasets")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = build_config(args)
            report = run_experiment(cfg)
            for path in emit_report(report, args.format, args.out):
                print(path)
        elif args.command == "trace-penalty":
            cfg = build_config(args)
            trace = penalty_gap_trace(cfg, args.fold, args.multiplier)
            for path in write_trace(trace, args.out, svg=args.svg):
                print(path)
        elif args.command == "fetch-data":
            print(fetch_data(args.name, args.data_dir))
        else:
            for name in list_datasets():
                kind = "bundled" if name in BUNDLED else "fetch"
                print(f"{name}\t{kind}")
    except (PenvfError, OSError) as exc:
        print(f"penvf: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
