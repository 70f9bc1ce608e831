"""Command-line entry point ``hpde``.

Exit codes: 0 success/PASS, 2 configuration error, 3 solver failure,
4 verifier FAIL, 5 blow-up.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import parse_config
from .errors import ConfigError, HPDEError
from .grid import read_vector_checkpoint
from .poisson import PoissonConfig
from .runner import (EXIT_CONFIG, EXIT_OK, exit_code_for, project_fields, read_csv,
                     residual_line, run_experiment)


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    result = run_experiment(cfg)
    print(result.message)
    for p in result.artifacts:
        print(f"  wrote {p}")
    return result.exit_code


def _cmd_verify(args) -> int:
    cfg = parse_config(args.config)
    kind = cfg.experiment.kind
    kinds = [kind] if kind.startswith("verify-") else ["verify-helmholtz", "verify-lemmas"]
    result = run_experiment(cfg, kinds)
    print(result.message)
    for key, val in result.summary.items():
        print(f"  {key}: {val}")
    return result.exit_code


def _cmd_project(args) -> int:
    try:
        grid, v = read_vector_checkpoint(args.field_in)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field {args.field_in}: {exc}") from exc
    cfg = PoissonConfig(method=args.method, rel_tol=args.rel_tol)
    paths, res = project_fields(v, grid, args.out_prefix, cfg)
    print(residual_line(res))
    for p in paths:
        print(f"  wrote {p}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        header, data = read_csv(args.csv)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {args.csv}: {exc}") from exc
    if args.plot_data:
        print("# " + " ".join(header))
        for row in data:
            print(" ".join(format(x, ".17g") for x in row))
        return EXIT_OK
    print(f"{args.csv}: {data.shape[0]} rows")
    print(f"{'column':<18}{'min':>14}{'max':>14}{'final':>14}")
    for j, name in enumerate(header):
        col = data[:, j] if data.size else np.zeros(1)
        print(f"{name:<18}{col.min():>14.6g}{col.max():>14.6g}{col[-1]:>14.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpde", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the experiment named in a config file")
    p.add_argument("config", type=Path)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run the projector and inequality verifiers")
    p.add_argument("config", type=Path)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("project", help="project a velocity checkpoint onto H1")
    p.add_argument("field_in", help="checkpoint stem or <stem>.v1.hpde")
    p.add_argument("out_prefix")
    p.add_argument("--method", choices=("cg", "dense"), default="cg")
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("report", help="summarise a norms CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--plot-data", action="store_true", help="emit whitespace-separated columns")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HPDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
