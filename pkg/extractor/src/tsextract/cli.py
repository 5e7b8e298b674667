"""Command-line entry point.

``tsextract extract --model ID --dataset PATH --out DIR [--device D] [--batch N]``
Exit codes: 0 success, 1 usage error, 2 data/model error.
"""

from __future__ import annotations

import argparse
import sys

from .adapter import CheckpointError, HookError, extract_dataset
from .datasets import DatasetError
from .registry import RegistryError, get_spec


class _UsageError(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise _UsageError(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="tsextract")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run a frozen checkpoint over a dataset, write interchange files")
    p.add_argument("--model", required=True, help="registered model id")
    p.add_argument("--dataset", required=True, help="labeled time-series text file")
    p.add_argument("--out", required=True, help="output directory for interchange files")
    p.add_argument("--checkpoint", required=True, help="checkpoint file for the model")
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--name", default=None, help="dataset name override (default: file stem)")
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--registry", action="append", default=[], help="extra registry directory (repeatable)")

    p = sub.add_parser("models", help="list registered models")
    p.add_argument("--registry", action="append", default=[])

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        if args.command == "models":
            from .registry import load_registry

            for spec in sorted(load_registry(tuple(args.registry)).values(), key=lambda s: s.model_id):
                print(
                    f"{spec.model_id}  arch={spec.architecture}  L={len(spec.capture_points)}  "
                    f"context={spec.max_context}"
                )
            return 0
        spec = get_spec(args.model, tuple(args.registry))
        path = extract_dataset(
            args.dataset,
            spec,
            args.out,
            args.checkpoint,
            split=args.split,
            dataset_name=args.name,
            device=args.device,
            batch=args.batch,
        )
        print(path)
        return 0
    except (RegistryError, CheckpointError, HookError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
