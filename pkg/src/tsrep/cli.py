"""Command-line entry point.

Subcommands: gen-toy, gen-blobs, embed, train-eval, benchmark, ablate,
analyze, pca, report. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from .aggregate import (
    LAYER_STRATEGIES,
    SEQUENCE_STRATEGIES,
    VARIATE_STRATEGIES,
    AggregationConfig,
)
from .augment import AugmentConfig
from .core import (
    BenchmarkSuite,
    DatasetFormatError,
    SuiteEntry,
    filter_by_length,
    generate_blobs,
    generate_sine_toy,
    load_dataset,
    write_dataset,
)
from .dtw import DtwConfig
from .evaluate import (
    EvaluationReport,
    RunResult,
    average_ranks,
    evaluate_cell,
    holm_correction,
    pca_project,
    render_report,
    run_benchmark,
    wilcoxon_signed_rank,
)
from .pipeline import embed_dataset, embedding_runner, model_config_from_dict
from .provider import InterchangeError, ProviderSpec

log = logging.getLogger("tsrep")

PATCH_GRID = (1, 2, 4, 8, 16, 32)


class _UsageError(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise _UsageError(1)


def _setup_logging() -> None:
    level = os.environ.get("TSREP_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["mock", "file"], default="mock")
    p.add_argument("--model-id", default="mock-default")
    p.add_argument("--provider-dir", default=None, help="directory with interchange files (file provider)")
    p.add_argument("--layers", type=int, default=4, help="mock provider depth")
    p.add_argument("--dim", type=int, default=32, help="mock provider width")
    p.add_argument("--seq", choices=list(SEQUENCE_STRATEGIES), default="mean")
    p.add_argument("--layer", choices=list(LAYER_STRATEGIES), default="concat")
    p.add_argument("--variate", choices=list(VARIATE_STRATEGIES), default="concat")
    p.add_argument("--no-layer-normalize", action="store_true")
    p.add_argument("--stats", action="store_true")
    p.add_argument("--diff", action="store_true")
    p.add_argument("--k", type=int, default=8, help="patch count (or neighbor count for --model dtw)")


def _provider_spec(args, seed: int) -> ProviderSpec:
    return ProviderSpec(
        kind=args.provider,
        model_id=args.model_id,
        n_layers=args.layers,
        dim=args.dim,
        seed=seed,
        directory=args.provider_dir,
    )


def _agg_config(args) -> AggregationConfig:
    return AggregationConfig(
        sequence=args.seq,
        layer=args.layer,
        variate=args.variate,
        layer_normalize=not args.no_layer_normalize,
    )


def _aug_config(args) -> AugmentConfig:
    return AugmentConfig(stats=args.stats, diff=args.diff, k=args.k)


def build_parser() -> _Parser:
    parser = _Parser(prog="tsrep")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy", help="generate the baseline-shifted sine toy dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["train", "test"], default="train")

    p = sub.add_parser("gen-blobs", help="generate the two-cluster classifier fixture")
    p.add_argument("--n", type=int, required=True, help="samples per class")
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("embed", help="dataset -> feature vectors CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "test"], default="train")
    _add_pipeline_flags(p)

    p = sub.add_parser("train-eval", help="one config x one dataset -> RunResult JSON")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--classifier", choices=["forest", "linear", "knn"], default="forest")
    p.add_argument("--model", choices=["dtw"], default=None, help="use the DTW baseline instead of embeddings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_pipeline_flags(p)

    p = sub.add_parser("benchmark", help="full config x dataset matrix -> report")
    p.add_argument("--config", required=True, help="benchmark config JSON")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--out", default=None, help="results directory (enables resume)")
    p.add_argument("--report", default=None, help="write markdown report here")

    p = sub.add_parser("ablate", help="strategy/augmentation grids on toy data")
    p.add_argument("--grid", choices=["aggregation", "variate", "augment", "patches"], required=True)
    p.add_argument("--datasets", type=int, default=3, help="number of toy train/test dataset pairs")
    p.add_argument("--n", type=int, default=48, help="samples per toy split")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--classifier", choices=["forest", "linear", "knn"], default="knn")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("analyze", help="ranks / Wilcoxon / Holm / CD groups from a score matrix CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("pca", help="feature CSV -> 2D projection CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=int, default=2)

    p = sub.add_parser("report", help="render tables from a results CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--style", choices=["markdown", "csv", "cd-plot-data"], default="markdown")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--out", default=None)

    return parser


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_features_csv(path: str, X: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for label, row in zip(y, X):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _read_features_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    labels, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            labels.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    if not rows:
        raise DatasetFormatError(f"{path}: empty feature file")
    return np.array(rows), np.array(labels, dtype=np.int64)


def _toy_pairs(n_datasets: int, n: int, seed: int):
    pairs = []
    for i in range(n_datasets):
        train = generate_sine_toy(n, seed + i, split="train")
        test = generate_sine_toy(n, seed + 1000 + i, split="test")
        train = _renamed(train, f"toy{i}")
        test = _renamed(test, f"toy{i}")
        pairs.append(SuiteEntry(train=train, test=test, kind="univariate"))
    return pairs


def _renamed(ds, name):
    from dataclasses import replace

    return replace(ds, name=name)


def cmd_gen_toy(args) -> int:
    ds = generate_sine_toy(args.n, args.seed, split=args.split)
    write_dataset(ds, args.out)
    log.info("wrote %d toy samples to %s", len(ds), args.out)
    return 0


def cmd_gen_blobs(args) -> int:
    X, y = generate_blobs(args.n, args.dims, args.separation, args.seed)
    _write_features_csv(args.out, X, y)
    return 0


def cmd_embed(args) -> int:
    ds = load_dataset(args.inp, split=args.split)
    X, y = embed_dataset(ds, _provider_spec(args, args.seed), _agg_config(args), _aug_config(args))
    _write_features_csv(args.out, X, y)
    log.info("embedded %d samples, F=%d", X.shape[0], X.shape[1])
    return 0


def cmd_train_eval(args) -> int:
    train = load_dataset(args.train, split="train")
    test = load_dataset(args.test, split="test")
    entry = SuiteEntry(train=_renamed(train, train.name), test=_renamed(test, train.name), kind="univariate" if train.n_variates == 1 else "multivariate")
    if args.model == "dtw":
        cfg = model_config_from_dict({"id": f"dtw-{args.k}nn", "model": "dtw", "k": args.k})
    else:
        from .evaluate import ModelConfig

        runner = embedding_runner(
            _provider_spec(args, args.seed), _agg_config(args), _aug_config(args), args.classifier, args.seed
        )
        cfg = ModelConfig(config_id=f"{args.provider}-{args.classifier}", runner=runner)
    result = evaluate_cell(cfg, entry)
    text = json.dumps(asdict(result), indent=2) + "\n"
    _write_or_print(text, args.out)
    return 0


def cmd_benchmark(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    entries = []
    for d in cfg["suite"]:
        train = _renamed(load_dataset(d["train"], split="train"), d["name"])
        test = _renamed(load_dataset(d["test"], split="test"), d["name"])
        entries.append(SuiteEntry(train=train, test=test, kind=d.get("kind", "univariate")))
    suite = BenchmarkSuite(tuple(entries))
    max_len = args.max_len if args.max_len is not None else int(cfg.get("max_len", 0))
    suite = filter_by_length(suite, max_len)
    configs = [model_config_from_dict(d) for d in cfg["configs"]]
    alpha = args.alpha if args.alpha is not None else float(cfg.get("alpha", 0.1))
    timeout = args.timeout if args.timeout is not None else float(cfg.get("timeout", 300.0))
    report = run_benchmark(
        suite,
        configs,
        DtwConfig(k=int(cfg.get("fallback_k", 1))),
        jobs=args.jobs,
        timeout=timeout,
        results_dir=args.out,
        alpha=alpha,
    )
    text = render_report(report, "markdown")
    _write_or_print(text, args.report)
    if args.out:
        with open(os.path.join(args.out, "results.csv"), "w", encoding="utf-8") as fh:
            fh.write(render_report(report, "csv"))
    return 0


def cmd_ablate(args) -> int:
    pairs = _toy_pairs(args.datasets, args.n, args.seed)
    names = [e.name for e in pairs]
    spec = ProviderSpec(kind="mock", model_id="mock-default", seed=args.seed)

    def score(agg: AggregationConfig, aug: AugmentConfig) -> list[float]:
        runner = embedding_runner(spec, agg, aug, classifier=args.classifier, seed=args.seed)
        accs = []
        for entry in pairs:
            pred = runner(entry.train, entry.test)
            accs.append(float(np.mean(pred == np.asarray(entry.test.labels))))
        return accs

    rows: list[list[str]] = []
    if args.grid == "aggregation":
        header = ["sequence", "layer"] + names + ["mean"]
        for seq in SEQUENCE_STRATEGIES:
            for layer in LAYER_STRATEGIES:
                accs = score(AggregationConfig(sequence=seq, layer=layer), AugmentConfig())
                rows.append([seq, layer] + [repr(a) for a in accs] + [repr(float(np.mean(accs)))])
    elif args.grid == "variate":
        header = ["variate"] + names + ["mean"]
        for var in VARIATE_STRATEGIES:
            accs = score(AggregationConfig(variate=var), AugmentConfig())
            rows.append([var] + [repr(a) for a in accs] + [repr(float(np.mean(accs)))])
    elif args.grid == "augment":
        header = ["stats", "diff"] + names + ["mean"]
        for stats in (False, True):
            for diff in (False, True):
                accs = score(AggregationConfig(), AugmentConfig(stats=stats, diff=diff))
                rows.append([str(stats), str(diff)] + [repr(a) for a in accs] + [repr(float(np.mean(accs)))])
    else:  # patches
        header = ["k"] + names + ["mean"]
        for k in PATCH_GRID:
            accs = score(AggregationConfig(), AugmentConfig(stats=True, k=k))
            rows.append([str(k)] + [repr(a) for a in accs] + [repr(float(np.mean(accs)))])
    text = ",".join(header) + "\n" + "\n".join(",".join(r) for r in rows) + "\n"
    _write_or_print(text, args.out)
    return 0


def _read_score_matrix(path: str) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise DatasetFormatError(f"{path}: need a header and at least one dataset row")
    header = lines[0].split(",")
    configs = header[1:]
    datasets, rows = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise DatasetFormatError(f"{path}: ragged row {ln!r}")
        datasets.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    return configs, datasets, np.array(rows).T  # configs x datasets


def cmd_analyze(args) -> int:
    configs, datasets, scores = _read_score_matrix(args.inp)
    ranks = average_ranks(scores)
    m = len(configs)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    pvals = []
    for i, j in pairs:
        try:
            pvals.append(wilcoxon_signed_rank(scores[i], scores[j]).p)
        except ValueError:
            pvals.append(1.0)
    flags = holm_correction(pvals, alpha=args.alpha) if pairs else []
    reject = np.zeros((m, m), dtype=bool)
    for (i, j), f in zip(pairs, flags):
        reject[i, j] = reject[j, i] = f
    from .evaluate import cd_groups

    groups = cd_groups(ranks, reject)
    lines = [f"alpha {args.alpha!r}"]
    for cid, r in zip(configs, ranks):
        lines.append(f"rank {cid} {float(r)!r}")
    for (i, j), p, f in zip(pairs, pvals, flags):
        lines.append(f"pair {configs[i]} {configs[j]} p={p!r} reject={f}")
    for g in groups:
        members = sorted(g, key=lambda i: ranks[i])
        lines.append("group " + " ".join(configs[i] for i in members))
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_pca(args) -> int:
    X, y = _read_features_csv(args.inp)
    proj = pca_project(X, dims=args.dims)
    _write_features_csv(args.out, proj, y)
    return 0


def cmd_report(args) -> int:
    report = _parse_results_csv(args.inp, alpha=args.alpha)
    _write_or_print(render_report(report, args.style), args.out)
    return 0


def _parse_results_csv(path: str, alpha: float = 0.1) -> EvaluationReport:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("config,dataset,kind"):
        raise DatasetFormatError(f"{path}: not a results CSV")
    config_ids: list[str] = []
    datasets: list[tuple[str, str]] = []
    results = {}
    meta: dict = {"configs": {}}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) not in (7, 11):
            raise DatasetFormatError(f"{path}: malformed results row {ln!r}")
        cid, name, kind, acc, bacc, status, wall = parts[:7]
        if cid not in config_ids:
            config_ids.append(cid)
            if len(parts) == 11:
                label, aug, type_, zs = parts[7:]
                meta["configs"][cid] = {"label": label, "aug": aug or None, "type": type_, "zs": zs}
        if (name, kind) not in datasets:
            datasets.append((name, kind))
        results[(cid, name)] = RunResult(
            dataset=name,
            config_id=cid,
            accuracy=float(acc),
            balanced_accuracy=float(bacc),
            status=status,
            wall_time=float(wall),
        )
    return EvaluationReport(config_ids=config_ids, datasets=datasets, results=results, alpha=alpha, meta=meta)


COMMANDS = {
    "gen-toy": cmd_gen_toy,
    "gen-blobs": cmd_gen_blobs,
    "embed": cmd_embed,
    "train-eval": cmd_train_eval,
    "benchmark": cmd_benchmark,
    "ablate": cmd_ablate,
    "analyze": cmd_analyze,
    "pca": cmd_pca,
    "report": cmd_report,
}


def cli_main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        return COMMANDS[args.command](args)
    except (DatasetFormatError, InterchangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
