"""Command-line entry point: ``resadmm run`` and ``resadmm compare``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiments import ConfigError, compare, format_table, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resadmm", description="FCResNet ADMM training experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment configuration")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--out", default=None, help="output directory (overrides the config)")
    p_run.add_argument("--dump-weights", action="store_true", help="write weights.bin")
    p_run.add_argument("--strict-assumptions", action="store_true", help="enforce the convergence assumptions")

    p_cmp = sub.add_parser("compare", help="run several configurations and tabulate")
    p_cmp.add_argument("configs", nargs="+", help="config files")
    p_cmp.add_argument("--repeats", "-r", type=int, default=1, help="runs per configuration")
    p_cmp.add_argument("--out", default=None, help="output directory for per-run artifacts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.dump_weights:
                cfg = replace(cfg, dump_weights=True, hyper=dict(cfg.hyper))
            if args.strict_assumptions:
                cfg = replace(cfg, strict=True, hyper=dict(cfg.hyper))
            art = run(cfg, out_dir=args.out)
            sys.stdout.write(art.summary)
            return art.exit_code
        cfgs = [load_config(path) for path in args.configs]
        rows = compare(cfgs, repeats=args.repeats, out_dir=args.out)
        sys.stdout.write(format_table(rows))
        return 0
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (ValueError, ArithmeticError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
