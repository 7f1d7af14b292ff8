"""Command-line entry point: ``spmelab <experiment> [--config PATH] [--seed N] [--out DIR]``.

Exit codes: 0 pass (or inconclusive), 2 bound violation, 3 solver failure, 4 config error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from ..errors import ContainmentFailure, InvalidArgument, SpmeError
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import PASS, VIOLATION, run_experiment
from .report import write_report

EXIT_OK, EXIT_VIOLATION, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3, 4
KINDS = ("simulate", "hole-fill", "propagation", "entropy", "bounds-only", "validate")

logger = logging.getLogger("spmelab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spmelab", description="Stochastic porous-medium propagation laboratory")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", help="YAML configuration file (defaults are used when omitted)")
        sp.add_argument("--seed", type=int, help="override the seed list with a single seed")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--plots", action="store_true", help="emit SVG plots of fronts against bounds")
    return p


def resolve_config(kind: str, path: str | None, seed: int | None, out: str | None) -> ExperimentConfig:
    cfg = load_config(path) if path else parse_config({"kind": kind})
    if cfg.kind != kind:
        raise ConfigError(f"config declares kind {cfg.kind!r} but the {kind!r} subcommand was used")
    return cfg.with_overrides(seed=seed, out=out)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args.command, args.config, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except ContainmentFailure as exc:
        print(f"{args.command}: containment not certified: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except InvalidArgument as exc:
        print(f"{args.command}: invalid setup: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpmeError as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    paths = write_report(report, cfg, cfg.output, plots=args.plots or cfg.plots)
    print(f"{report.kind}: {report.status}  ->  {paths['report']}")
    if report.status == VIOLATION:
        return EXIT_VIOLATION
    return EXIT_OK if report.status in (PASS, "inconclusive") else EXIT_VIOLATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
