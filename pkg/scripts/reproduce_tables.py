#!/usr/bin/env python3
"""Run the five benchmark tables and print the resulting CSV tables.

Each table's configuration lives in configs/table<N>.json; results land in
<out>/table<N>/ as report.json + table.csv.
"""

import argparse
import json
from pathlib import Path

from imexks import cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/tables", help="output root directory")
    parser.add_argument("--only", type=int, choices=range(1, 6), default=None,
                        help="run a single table")
    args = parser.parse_args()

    wanted = [args.only] if args.only else [1, 2, 3, 4, 5]
    for idx in wanted:
        config_path = ROOT / "configs" / f"table{idx}.json"
        cfg = cli.config_from_dict(json.loads(config_path.read_text()))
        out_dir = Path(args.out) / f"table{idx}"
        cli.run(cfg, out_dir)
        print(f"=== table {idx} ({cfg.mode}) -> {out_dir}")
        print((out_dir / "table.csv").read_text())


if __name__ == "__main__":
    main()
