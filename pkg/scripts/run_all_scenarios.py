#!/usr/bin/env python3
"""Run every shipped config and print one line per run; reports go to --out-dir."""

import argparse
import sys
import time
from pathlib import Path

import yaml

from finslerforms.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run_one(path: Path, out_dir: Path) -> int:
    scenario = yaml.safe_load(path.read_text())["scenario"]
    suffix = "csv" if scenario == "scan" else "json"
    return main([scenario, "--config", str(path), "--out", str(out_dir / f"{path.stem}.{suffix}")])


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--configs", type=Path, default=ROOT / "configs")
    p.add_argument("--out-dir", type=Path, default=ROOT / "reports")
    p.add_argument("--only", nargs="*", help="config stems to run")
    return p.parse_args()


if __name__ == "__main__":
    args = parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    paths = sorted(args.configs.glob("*.yaml"))
    if args.only:
        paths = [p for p in paths if p.stem in args.only]
    failed = 0
    for path in paths:
        t0 = time.perf_counter()
        code = run_one(path, args.out_dir)
        failed += code != 0
        print(f"{path.stem:<28} exit={code} {time.perf_counter() - t0:7.1f} s", flush=True)
    sys.exit(1 if failed else 0)
