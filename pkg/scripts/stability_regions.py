#!/usr/bin/env python3
"""Emit stability-region fields and |r| = 1 boundaries for plotting.

Scans the real-y family (region growth as y -> -inf) and the four purely
imaginary y values; each y gives stability_y<label>.csv plus
boundary_y<label>.csv under <out>.
"""

import argparse
import json
from pathlib import Path

from imexks import cli

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/stability")
    parser.add_argument("--resolution", type=int, default=None,
                        help="samples per axis (default from the configs)")
    args = parser.parse_args()

    for name in ("stability_real_y", "stability_imag_y"):
        raw = json.loads((ROOT / "configs" / f"{name}.json").read_text())
        if args.resolution:
            raw["resolution"] = args.resolution
        cfg = cli.config_from_dict(raw)
        out_dir = Path(args.out) / name.removeprefix("stability_")
        report = cli.run(cfg, out_dir)
        for row in report["rows"]:
            tag = "empty" if row["empty"] else f"area {row['area']:.2f}"
            print(f"y = {row['y']:>5}: {tag}, {row['n_boundary_polylines']} boundary polyline(s)")
        print(f"-> {out_dir}")


if __name__ == "__main__":
    main()
