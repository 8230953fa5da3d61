"""Command line entry point: ``hybridfs run | rank | synth``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .dataset import DataError, load_csv, min_max_scale, write_csv
from .igfilter import rank_and_filter, write_ranking
from .pipeline import (
    ConfigError,
    ExperimentError,
    format_tables,
    generate_synthetic,
    load_config,
    run_experiment,
)
from .search import THREADS_ENV, default_threads

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

log = logging.getLogger("hybridfs")


def _common(default) -> argparse.ArgumentParser:
    # subcommands get SUPPRESS defaults so they do not clobber top-level flags
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=default, help="override the seed list with one seed")
    p.add_argument("--out-dir", default=default, help="override the output directory")
    p.add_argument(
        "--threads", type=int, default=default,
        help=f"worker threads (default: ${THREADS_ENV} or 1)",
    )
    p.add_argument("-v", "--verbose", action="store_true",
                   default=False if default is None else default)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="hybridfs",
        description="Information-gain filter plus swarm/GA wrapper feature selection.",
        parents=[_common(None)],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment suite from a config file")
    run.add_argument("--config", required=True, type=Path, help="key = value experiment file")

    rank = sub.add_parser("rank", parents=[common], help="dump information-gain ranking")
    rank.add_argument("--data", required=True, type=Path, help="dataset CSV")
    rank.add_argument("--bins", type=int, default=10, help="equal-width bins per feature")
    rank.add_argument("--threshold", type=float, default=0.0, help="survivor cut-off reported with -v")
    rank.add_argument("--label-column", default="class")
    rank.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")

    synth = sub.add_parser("synth", parents=[common], help="write a planted-feature dataset")
    synth.add_argument("--samples", type=int, required=True, help="number of rows")
    synth.add_argument("--noise", type=int, required=True, help="Uniform(0,1) noise columns")
    synth.add_argument("--informative", type=int, required=True, help="planted class-dependent columns")
    synth.add_argument("--classes", type=int, required=True)
    synth.add_argument("--sep", type=float, default=1.0, help="class separation in (0, 1]")
    synth.add_argument("--out", type=Path, required=True, help="CSV path; ground truth goes beside it as .truth.json")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.threads
    return default_threads()


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    # flag beats environment beats config file
    if args.threads is not None or THREADS_ENV in os.environ:
        overrides = {"threads": _threads(args)}
    else:
        overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.out_dir is not None:
        overrides["output_dir"] = args.out_dir
    cfg = replace(cfg, **overrides)
    report = run_experiment(cfg)
    sys.stdout.write(format_tables(report))
    print(f"\nreport written to {cfg.output_dir}")
    return EXIT_OK


def cmd_rank(args) -> int:
    if args.bins < 1:
        raise ConfigError("--bins must be >= 1")
    d = min_max_scale(load_csv(args.data, args.label_column))
    ranking = rank_and_filter(d, args.bins, args.threshold)
    if args.out is None:
        write_ranking(d, ranking, sys.stdout)
    else:
        write_ranking(d, ranking, args.out)
    log.info("%d of %d features above threshold %g", len(ranking.selected), d.n_features, args.threshold)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        synth = generate_synthetic(
            args.samples, args.noise, args.informative, args.classes, args.sep,
            0 if args.seed is None else args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = args.out
    if args.out_dir is not None and not out.is_absolute():
        out = Path(args.out_dir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(synth.dataset, out)
    truth = {
        "informative_indices": [int(j) for j in synth.informative],
        "informative_names": [synth.dataset.feature_names[j] for j in synth.informative],
    }
    out.with_suffix(".truth.json").write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} ({synth.dataset.n_samples} samples, {synth.dataset.n_features} features)")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "rank": cmd_rank, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, DataError) else 1


if __name__ == "__main__":
    sys.exit(main())
