#!/usr/bin/env python3
"""End-to-end benchmark demo on generated toy datasets: builds a small suite,
writes a benchmark config, runs the full matrix (with resume directory), and
prints the markdown report. Re-running reuses every completed cell."""

import argparse
import json
import os
import sys

from tsrep.cli import cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work-dir", default="benchmark_demo")
    ap.add_argument("--datasets", type=int, default=3)
    ap.add_argument("--n", type=int, default=32, help="samples per split")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    data_dir = os.path.join(args.work_dir, "data")
    os.makedirs(data_dir, exist_ok=True)
    suite = []
    for i in range(args.datasets):
        train = os.path.join(data_dir, f"toy{i}_train.txt")
        test = os.path.join(data_dir, f"toy{i}_test.txt")
        for path, split, seed in ((train, "train", args.seed + i), (test, "test", args.seed + 1000 + i)):
            code = cli_main(["gen-toy", "--n", str(args.n), "--seed", str(seed), "--split", split, "--out", path])
            if code != 0:
                return code
        suite.append({"name": f"toy{i}", "train": train, "test": test, "kind": "univariate"})

    config = {
        "suite": suite,
        "fallback_k": 1,
        "alpha": 0.1,
        "configs": [
            {"id": "mock-forest-statdiff", "classifier": "forest", "stats": True, "diff": True,
             "label": "Mock provider", "aug": "statdiff", "type": "Mock", "zs": "yes"},
            {"id": "mock-forest-noaug", "classifier": "forest",
             "label": "Mock provider", "aug": "noaug", "type": "Mock", "zs": "yes"},
            {"id": "dtw-1nn", "model": "dtw", "k": 1, "label": "DTW 1-NN", "type": "Distance", "zs": "-"},
        ],
    }
    config_path = os.path.join(args.work_dir, "config.json")
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)

    results_dir = os.path.join(args.work_dir, "results")
    return cli_main(
        ["benchmark", "--config", config_path, "--jobs", str(args.jobs), "--out", results_dir]
    )


if __name__ == "__main__":
    sys.exit(main())
