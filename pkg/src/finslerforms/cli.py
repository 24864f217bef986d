"""Command line entry point: ``finslerforms <scenario> --config <path> [...]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import finsler as F
from .scenarios import SCENARIOS, ConfigError, ScenarioConfig, run, scan

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finslerforms", description="Finsler bundle Chern form verification runs.")
    p.add_argument("scenario", choices=sorted(SCENARIOS) + ["scan"])
    p.add_argument("--config", required=True, type=Path, help="YAML or JSON scenario config")
    p.add_argument("--seed", type=int)
    p.add_argument("--radial-order", type=int, help="fiber quadrature radial order")
    p.add_argument("--angular-order", type=int, help="fiber quadrature angular order")
    p.add_argument("--mc-samples", type=int, help="fiber Monte Carlo sample count")
    p.add_argument("--out", type=Path, help="report path (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def configure(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config)
    cfg.scenario = args.scenario
    if args.seed is not None:
        cfg.seed = args.seed
    quad = cfg.quadrature
    if args.radial_order is not None:
        quad = replace(quad, radial_order=args.radial_order)
    if args.angular_order is not None:
        quad = replace(quad, angular_order=args.angular_order)
    if args.mc_samples is not None:
        quad = replace(quad, mc_samples=args.mc_samples)
    cfg.quadrature = quad
    if args.out is not None:
        cfg.output.path = str(args.out)
    if args.format is not None:
        cfg.output.format = args.format
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = configure(args)
        if cfg.scenario == "scan":
            text, ok = scan(cfg), None
        else:
            report = run(cfg)
            text = report.to_json() if cfg.output.format == "json" else report.to_csv()
            ok = report.passed
    except (ConfigError, F.MetricError, FileNotFoundError) as exc:
        print(f"finslerforms: {exc}", file=sys.stderr)
        witness = getattr(exc, "witness", None)
        if witness is not None:
            print(f"finslerforms: witness direction {list(map(complex, witness))}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output.path:
        Path(cfg.output.path).write_text(text)
    else:
        sys.stdout.write(text)
    if ok is None:
        ok = all(line.endswith("True") for line in text.splitlines()[1:])
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
