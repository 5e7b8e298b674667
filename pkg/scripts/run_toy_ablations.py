#!/usr/bin/env python3
"""Run every ablation grid (aggregation, variate, augment, patches) on the
baseline-shifted sine toy data and write one CSV per grid."""

import argparse
import os
import sys

from tsrep.cli import cli_main

GRIDS = ("aggregation", "variate", "augment", "patches")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="ablations")
    ap.add_argument("--datasets", type=int, default=3, help="toy train/test pairs per grid")
    ap.add_argument("--n", type=int, default=48, help="samples per toy split")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--classifier", choices=["forest", "linear", "knn"], default="knn")
    args = ap.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    for grid in GRIDS:
        out = os.path.join(args.out_dir, f"{grid}.csv")
        code = cli_main(
            [
                "ablate",
                "--grid", grid,
                "--datasets", str(args.datasets),
                "--n", str(args.n),
                "--seed", str(args.seed),
                "--classifier", args.classifier,
                "--out", out,
            ]
        )
        if code != 0:
            return code
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
