"""Command-line entry point: one subcommand per experiment kind."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NormLabError
from .harness import EXPERIMENTS, load_config, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normlab",
        description="Desk-scale experiments on randomized sign-averaged norms.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run a {name} experiment from a config file")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out-dir", default=None, help="override output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads for trials (results are thread-count independent); "
            "falls back to NORMLAB_THREADS",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides: dict = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    try:
        config = load_config(args.config, experiment=args.experiment, overrides=overrides)
        if args.out_dir is not None:
            config.raw["output"] = {**config.raw["output"], "dir": args.out_dir}
        report = run_experiment(config)
    except ConfigError as exc:
        loc = f" (field: {exc.field})" if exc.field else ""
        print(f"config error{loc}: {exc}", file=sys.stderr)
        return 2
    except NormLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = config.out_dir
    print(f"{config.experiment}: done in {report.wall_time_s:.2f}s -> {out}")
    for tag, name in report.outputs.items():
        print(f"  {tag}: {out / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
