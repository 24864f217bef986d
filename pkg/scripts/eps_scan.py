#!/usr/bin/env python3
"""Sweep the Finsler perturbation strength and print the scan CSV.

The minimum Levi eigenvalue column is expected to decrease with eps; this is
reported, not asserted.
"""

import argparse
import csv
import io
from pathlib import Path

from finslerforms.scenarios import ScenarioConfig, scan

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", type=Path, default=ROOT / "configs" / "scan-eps.yaml")
    p.add_argument("--values", type=float, nargs="*", help="override the eps grid")
    p.add_argument("--out", type=Path)
    args = p.parse_args()

    cfg = ScenarioConfig.load(args.config)
    if args.values is not None:
        cfg.params = {**cfg.params, "grid": {"param": "eps", "values": args.values}}
    text = scan(cfg)
    if args.out:
        args.out.write_text(text)
    print(text, end="")
    eig = [float(row["min_levi_eig"]) for row in csv.DictReader(io.StringIO(text))]
    monotone = all(a >= b for a, b in zip(eig, eig[1:]))
    print(f"# min Levi eigenvalue monotone non-increasing in eps: {monotone}")


if __name__ == "__main__":
    main()
