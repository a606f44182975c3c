#!/usr/bin/env python3
"""Produce the solution-field CSV data behind the qualitative figures.

Covers the traveling wave up to t = 10, the long-time chaotic periodic run,
the Gaussian-pulse evolution, and the beta sweep of problem 4.  Everything is
written as field_t<time>.csv files for external plotting.
"""

import argparse
import json
import math
from pathlib import Path

from imexks import cli

ROOT = Path(__file__).resolve().parent.parent

SWEEP = {
    "beta_0.4": 0.4 / math.pi**2,
    "beta_0.6": 0.6 / math.pi**2,
    "beta_0.8": 0.8 / math.pi**2,
}


def run_config(raw: dict, out_dir: Path):
    report = cli.run(cli.config_from_dict(raw), out_dir)
    print(f"-> {out_dir}: {', '.join(report['outputs'])}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/fields")
    args = parser.parse_args()
    out = Path(args.out)

    for name in ("wave_field", "chaos_long"):
        raw = json.loads((ROOT / "configs" / f"{name}.json").read_text())
        run_config(raw, out / name)

    run_config({"mode": "solve", "problem": 3, "N": 101, "k": 0.1, "T": 30.0,
                "snapshots": [0.0, 10.0, 20.0, 30.0]}, out / "gaussian_pulse")

    for label, beta in SWEEP.items():
        run_config({"mode": "solve", "problem": 4, "h": 0.05, "k": 0.001, "T": 2.0,
                    "beta": beta, "snapshots": [0.5, 1.0, 1.5, 2.0]}, out / label)


if __name__ == "__main__":
    main()
