"""Command-line interface.

Subcommands::

    fedsim run --config exp.cfg [--seed N] [--out DIR]
    fedsim sweep --config exp.cfg --grid grid.cfg [--out DIR]
    fedsim qp-check [--instances N] [--seed N]

``run`` executes one experiment and prints the CSV path.  ``sweep``
runs the Cartesian product of the grid file's values over the base
config, one CSV per cell.  ``qp-check`` validates the min-norm solver
against the brute-force reference.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import qp, qp_reference, runner
from .config import grid_cells, load_config, load_grid, parse_flat, with_overrides
from .errors import FedsimError


def _cmd_run(args) -> int:
    cfg = with_overrides(load_config(args.config), seed=args.seed, out_dir=args.out)
    if args.csv_header:
        cfg = replace(cfg, data=replace(cfg.data, csv_header=True))
    result = runner.run(cfg)
    print(result.csv_path)
    return 0


def _cell_name(overrides: dict) -> str:
    parts = [f"{k.replace('.', '-')}={v}" for k, v in sorted(overrides.items())]
    return "_".join(parts) if parts else "base"


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        base = parse_flat(fh.read())
    grid = load_grid(args.grid)
    out_root = Path(args.out) if args.out else None
    for overrides, cfg in grid_cells(base, grid):
        cell_dir = (out_root or Path(cfg.out_dir)) / _cell_name(overrides)
        cfg = with_overrides(cfg, out_dir=str(cell_dir))
        result = runner.run(cfg)
        print(result.csv_path)
    return 0


def _cmd_qp_check(args) -> int:
    summary = qp_reference.check_instances(args.instances, args.seed)
    print(f"backend: {qp.backend()}")
    print(f"instances: {summary['instances']}")
    print(f"max |solver - grid| objective error: {summary['max_abs_err']:.3e}")
    print(f"max optimality-certificate gap:      {summary['max_certificate_gap']:.3e}")
    ok = summary["failures"] == 0
    print(f"result: {'PASS' if ok else 'FAIL'} "
          f"({summary['failures']} instances beyond {summary['tol']:g})")
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fedsim", description="Federated-learning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--csv-header", action="store_true",
                       help="skip the first line of the input CSV dataset")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a Cartesian grid of experiments")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_check = sub.add_parser("qp-check", help="validate the QP solver against brute force")
    p_check.add_argument("--instances", type=int, default=200)
    p_check.add_argument("--seed", type=int, default=20240)
    p_check.set_defaults(func=_cmd_qp_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FedsimError as exc:
        print(f"fedsim: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fedsim: io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
