"""Command line entry point.

Subcommands:
    run <config.json>   execute an experiment config
    recipes             list built-in templates; --write DIR dumps them as JSON
    validate            run the quick invariant suite

Exit codes: 0 ok, 1 runtime failure, 2 config error.  MAFLA_NUM_THREADS caps
the numpy thread pool for reproducible timing (set before numpy import to be
fully effective).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CapabilityError, ParameterError


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        print(f"error: config file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    except json.JSONDecodeError as e:
        print(f"error: {path}:{e.lineno}:{e.colno}: {e.msg}", file=sys.stderr)
        raise SystemExit(2)


def main(argv=None):
    os.environ.setdefault("MAFLA_NUM_THREADS", "0")
    parser = argparse.ArgumentParser(prog="mafla",
                                     description="heavy-tailed sampling experiments")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")

    p_rec = sub.add_parser("recipes", help="show built-in config templates")
    p_rec.add_argument("--write", metavar="DIR", default=None,
                       help="write every template as DIR/<name>.json")
    p_rec.add_argument("--show", metavar="NAME", default=None,
                       help="print one template as JSON")

    sub.add_parser("validate", help="run the quick invariant suite")

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2

    from . import experiments  # deferred: keeps --help fast

    if args.command == "recipes":
        book = experiments.recipes()
        if args.show:
            if args.show not in book:
                print(f"error: unknown recipe {args.show!r}", file=sys.stderr)
                return 2
            print(json.dumps(book[args.show], indent=1, sort_keys=True))
            return 0
        if args.write:
            os.makedirs(args.write, exist_ok=True)
            for name, cfg in book.items():
                with open(os.path.join(args.write, f"{name}.json"), "w") as fh:
                    json.dump(cfg, fh, indent=1, sort_keys=True)
            print(f"wrote {len(book)} templates to {args.write}")
            return 0
        for name in book:
            print(name)
        return 0

    if args.command == "validate":
        cfg = experiments.recipes()["validate"]
        return experiments.run_experiment(cfg)

    # run
    cfg = _load_config(args.config)
    try:
        return experiments.run_experiment(cfg)
    except experiments.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ParameterError, CapabilityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
