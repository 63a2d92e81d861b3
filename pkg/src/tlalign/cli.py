"""Command line entry point ``tl-align``.

Exit codes: 0 success, 1 failed criterion (``--strict``) or oracle hard fail,
2 input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from tlalign import report
from tlalign.config import ConfigError, key_dimension, load_config, render_config
from tlalign.oracle import OracleConfig
from tlalign.units import UnitError, parse_quantity

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tl-align", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="instrument config file, '-' for stdin")
        return p

    p = command("budget", "alignment table, reduction factors and total visibility")
    p.add_argument("--strict", action="store_true", help="exit 1 if any criterion fails")
    p.add_argument("--format", choices=("table", "csv"), default="table")

    p = command("sweep", "vary one config key and emit the budget quantities as CSV")
    p.add_argument("--param", required=True, help="dotted key, e.g. geometry.roll")
    p.add_argument("--start", required=True, help="start value with unit, e.g. '0 mrad'")
    p.add_argument("--stop", required=True)
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.add_argument("--output", type=Path, help="write CSV here instead of stdout")

    p = command("figures", "write CSV data behind the standing-wave, roll and vibration plots")
    p.add_argument("--which", choices=("fig2", "fig3", "fig4"), required=True)
    p.add_argument("--outdir", type=Path, default=Path("."))

    p = command("oracle", "check analytic reduction factors against Monte Carlo averaging")
    p.add_argument("--factor", default="all",
                   choices=("all", *report.ORACLE_FACTORS))
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)

    command("check-config", "validate a config and print it fully resolved in SI")
    return parser


def _emit(text: str, output: Path | None = None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")


def _budget(cfg, args) -> int:
    budget = report.budget_for(cfg)
    if args.format == "csv":
        _emit(report.budget_csv(budget))
    else:
        _emit(report.budget_table(cfg, budget))
    return EXIT_FAIL if args.strict and not budget.all_pass else EXIT_OK


def _sweep(cfg, args) -> int:
    try:
        dimension = key_dimension(args.param)
    except KeyError:
        raise ConfigError(f"no config key {args.param!r} to sweep") from None
    if dimension in ("word", "integer"):
        raise ConfigError(f"{args.param!r} cannot be swept")
    try:
        start = parse_quantity(args.start, dimension)
        stop = parse_quantity(args.stop, dimension)
        grid = report.sweep_grid(start, stop, args.points, args.scale)
        text = report.sweep_csv(cfg, args.param, grid)
    except (UnitError, ValueError) as exc:
        raise ConfigError(f"sweep {args.param}: {exc}") from None
    _emit(text, args.output)
    return EXIT_OK


def _figures(cfg, args) -> int:
    for path in report.write_figures(cfg, args.which, args.outdir):
        print(path)
    return EXIT_OK


def _oracle(cfg, args) -> int:
    base = cfg.oracle
    try:
        ocfg = OracleConfig(
            sample_count=base.sample_count if args.samples is None else args.samples,
            seed=base.seed if args.seed is None else args.seed,
            chunk_size=base.chunk_size,
            velocity_distribution=base.velocity_distribution,
        )
        factors = list(report.ORACLE_FACTORS) if args.factor == "all" else [args.factor]
        rows = report.run_oracles(cfg, factors, ocfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit(report.oracle_table(rows, ocfg))
    failed = any(r.result.sigma_distance > report.HARD_FAIL_SIGMA for r in rows)
    return EXIT_FAIL if failed else EXIT_OK


def _check_config(cfg, args) -> int:
    _emit(render_config(cfg))
    return EXIT_OK


COMMANDS = {
    "budget": _budget,
    "sweep": _sweep,
    "figures": _figures,
    "oracle": _oracle,
    "check-config": _check_config,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"tl-align: config error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
