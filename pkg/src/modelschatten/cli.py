"""Command line entry point: ``modelschatten <experiment> [--config PATH] [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ModelSchattenError
from .experiments import EXPERIMENTS, read_config_text, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modelschatten",
                                     description="Schatten-class experiments for composition "
                                                 "operators on model spaces.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value configuration file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed of the LCG used for sampling")
        p.add_argument("--tol", type=float, default=None, help="override run.tol")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration entry (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    raw: dict[str, str] = {}
    try:
        if args.config is not None:
            raw.update(read_config_text(args.config.read_text()))
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ModelSchattenError(f"--set expects KEY=VALUE, got {item!r}")
            raw[key.strip()] = value.strip()
        summary = run_experiment(args.experiment, raw, args.out, args.seed, args.tol)
    except (ModelSchattenError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"experiment": summary["experiment"], "completed": summary["completed"],
                      "out": str(args.out / args.experiment)}, sort_keys=True))
    return 0 if summary["completed"] else 1


if __name__ == "__main__":
    sys.exit(main())
