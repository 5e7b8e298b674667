"""Benchmark orchestration: metrics, DTW fallback substitution, rank statistics,
Wilcoxon/Holm significance testing, critical-difference grouping, correlation,
PCA diagnostics, and report rendering."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from decimal import Decimal, ROUND_HALF_UP
from typing import Callable, Sequence

import numpy as np

from .core import BenchmarkSuite, LabeledDataset, SuiteEntry
from .dtw import DtwConfig, dtw_knn_classify

# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be non-empty and equal length")
    return float(np.mean(pred == truth))


def balanced_accuracy(pred, truth) -> float:
    """Unweighted mean of per-class recall over classes present in truth."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("pred and truth must be non-empty and equal length")
    recalls = []
    for cls in np.unique(truth):
        mask = truth == cls
        recalls.append(float(np.mean(pred[mask] == cls)))
    return float(np.mean(recalls))


# ---------------------------------------------------------------------------
# Rank statistics
# ---------------------------------------------------------------------------

def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of their rank span."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def average_ranks(scores: np.ndarray) -> np.ndarray:
    """Per-dataset ranks (1 = highest score, ties mid-ranked), averaged per config.

    scores: configs x datasets, no missing cells.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.size == 0:
        raise ValueError("scores must be a non-empty configs x datasets matrix")
    if not np.all(np.isfinite(scores)):
        raise ValueError("missing cells in score matrix")
    per_dataset = np.stack([_midranks(-scores[:, d]) for d in range(scores.shape[1])], axis=1)
    return per_dataset.mean(axis=1)


@dataclass(frozen=True)
class WilcoxonResult:
    p: float
    statistic: float  # rank sum of positive differences
    n: int  # pairs remaining after dropping zero differences
    degenerate: bool
    method: str  # "exact" | "approx" | "degenerate"


EXACT_CUTOFF = 25


def wilcoxon_signed_rank(x, y) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped; tied |difference| ranks are averaged.
    n <= 25 uses the exact null distribution of the positive-rank sum;
    larger n uses a normal approximation with tie-corrected variance and
    continuity correction.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    d = x - y
    d = d[d != 0.0]
    if d.size == 0:
        return WilcoxonResult(p=1.0, statistic=0.0, n=0, degenerate=True, method="degenerate")
    if d.size < 3:
        raise ValueError(f"need >= 3 non-zero differences, got {d.size}")
    absd = np.abs(d)
    ranks = _midranks(absd)
    w_pos = float(np.sum(ranks[d > 0]))
    n = d.size
    if n <= EXACT_CUTOFF:
        p = _exact_two_sided_p(ranks, w_pos)
        return WilcoxonResult(p=p, statistic=w_pos, n=n, degenerate=False, method="exact")
    mu = n * (n + 1) / 4.0
    # tie correction over groups of equal |difference|
    _, counts = np.unique(absd, return_counts=True)
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(counts**3 - counts)) / 48.0
    z = (abs(w_pos - mu) - 0.5) / math.sqrt(sigma2)
    p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return WilcoxonResult(p=p, statistic=w_pos, n=n, degenerate=False, method="approx")


def _exact_two_sided_p(ranks: np.ndarray, w_pos: float) -> float:
    """Exact p over all 2^n sign assignments via a counting DP on doubled ranks."""
    doubled = [int(round(2 * r)) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled:
        for s in range(total, r - 1, -1):
            if counts[s - r]:
                counts[s] += counts[s - r]
    w2 = int(round(2 * w_pos))
    n = len(doubled)
    lower = sum(counts[: w2 + 1])
    upper = sum(counts[w2:])
    p = 2 * min(lower, upper) / (1 << n)
    return min(1.0, p)


def holm_correction(pvals: Sequence[float], alpha: float = 0.1) -> list[bool]:
    """Step-down Holm: reject sorted p_(i) while p_(i) <= alpha/(m-i+1)."""
    pvals = list(pvals)
    if any(p < 0 or p > 1 for p in pvals):
        raise ValueError("p-values must lie in [0, 1]")
    m = len(pvals)
    order = sorted(range(m), key=lambda i: pvals[i])
    reject = [False] * m
    for pos, i in enumerate(order):
        if pvals[i] <= alpha / (m - pos):
            reject[i] = True
        else:
            break
    return reject


def cd_groups(ranks: Sequence[float], pairwise_reject: np.ndarray) -> list[set[int]]:
    """Maximal rank-contiguous sets with no rejected pair inside (CD-diagram bars).

    Groups of size 1 are omitted. `pairwise_reject` must be symmetric with a
    false diagonal.
    """
    ranks = np.asarray(ranks, dtype=np.float64)
    reject = np.asarray(pairwise_reject, dtype=bool)
    m = ranks.size
    if reject.shape != (m, m) or np.any(reject != reject.T) or np.any(np.diag(reject)):
        raise ValueError("reject matrix must be symmetric with false diagonal")
    order = np.argsort(ranks, kind="stable")
    groups: list[set[int]] = []
    prev_end = -1
    for i in range(m):
        j = i
        while j + 1 < m and not reject[np.ix_(order[i : j + 2], order[i : j + 2])].any():
            j += 1
        if j > i and j > prev_end:
            groups.append(set(int(c) for c in order[i : j + 1]))
            prev_end = j
    return groups


def score_correlation(xs, ys) -> tuple[float, float]:
    """(Pearson r, Spearman rho). Spearman is Pearson on mid-ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 3:
        raise ValueError("need equal-length vectors with >= 3 entries")
    return _pearson(xs, ys), _pearson(_midranks(xs), _midranks(ys))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        raise ValueError("zero variance in correlation input")
    return float(np.dot(da, db) / math.sqrt(va * vb))


# ---------------------------------------------------------------------------
# PCA diagnostics
# ---------------------------------------------------------------------------

def pca_project(X: np.ndarray, dims: int = 2) -> np.ndarray:
    """Project onto the top right singular vectors of the column-centered matrix.

    Sign convention: the largest-magnitude entry of each component is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < dims or X.shape[1] < dims:
        raise ValueError(f"need N >= {dims} and F >= {dims}")
    Xc = X - X.mean(axis=0)
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    tol = max(X.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank < dims:
        raise ValueError(f"matrix rank {rank} is below requested dims {dims}")
    comps = Vt[:dims]
    proj = Xc @ comps.T
    for i in range(dims):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
            proj[:, i] = -proj[:, i]
    return proj


def pc1_correlation(X: np.ndarray, target: np.ndarray) -> float:
    """|Pearson| between the first principal component and a target variable.

    A feature matrix with no variance at all (fully collapsed embeddings) has
    no first component; it carries zero signal about the target, reported as 0.
    """
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    if float(np.max(np.abs(Xc))) < 1e-12:
        return 0.0
    pc1 = pca_project(X, dims=1)[:, 0]
    if float(np.std(pc1)) < 1e-12:
        return 0.0
    r, _ = score_correlation(pc1, target)
    return abs(r)


# ---------------------------------------------------------------------------
# Benchmark orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    dataset: str
    config_id: str
    accuracy: float | None
    balanced_accuracy: float | None
    status: str  # "ok" | "failed" | "fallback"
    wall_time: float = 0.0
    error: str | None = None


@dataclass(frozen=True)
class ModelConfig:
    """One benchmark column: an id plus a runner mapping (train, test) to predictions."""

    config_id: str
    runner: Callable[[LabeledDataset, LabeledDataset], np.ndarray]
    label: str = ""
    aug: str | None = None  # "noaug" | "statdiff" | None
    type_: str = "-"
    zs: str = "-"


@dataclass
class EvaluationReport:
    config_ids: list[str]
    datasets: list[tuple[str, str]]  # (name, kind)
    results: dict[tuple[str, str], RunResult]
    alpha: float = 0.1
    meta: dict = field(default_factory=dict)

    def score_matrix(self, metric: str = "accuracy") -> np.ndarray:
        m = np.empty((len(self.config_ids), len(self.datasets)))
        for i, cid in enumerate(self.config_ids):
            for j, (name, _) in enumerate(self.datasets):
                r = self.results[(cid, name)]
                m[i, j] = getattr(r, metric)
        return m

    def group_means(self, metric: str = "accuracy") -> dict[str, np.ndarray]:
        scores = self.score_matrix(metric)
        kinds = np.array([kind for _, kind in self.datasets])
        out = {}
        for group in ("univariate", "multivariate"):
            mask = kinds == group
            out[group] = scores[:, mask].mean(axis=1) if mask.any() else np.full(len(self.config_ids), np.nan)
        out["overall"] = scores.mean(axis=1)
        return out

    def analysis(self, metric: str = "accuracy", alpha: float | None = None):
        alpha = self.alpha if alpha is None else alpha
        scores = self.score_matrix(metric)
        ranks = average_ranks(scores)
        m = len(self.config_ids)
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        pvals = []
        for i, j in pairs:
            try:
                pvals.append(wilcoxon_signed_rank(scores[i], scores[j]).p)
            except ValueError:
                pvals.append(1.0)  # too few non-zero differences to separate
        flags = holm_correction(pvals, alpha=alpha) if pairs else []
        reject = np.zeros((m, m), dtype=bool)
        pmat = np.ones((m, m))
        for (i, j), p, f in zip(pairs, pvals, flags):
            pmat[i, j] = pmat[j, i] = p
            reject[i, j] = reject[j, i] = f
        groups = cd_groups(ranks, reject)
        return ranks, pmat, reject, groups


def evaluate_cell(config: ModelConfig, entry: SuiteEntry) -> RunResult:
    start = time.perf_counter()
    pred = config.runner(entry.train, entry.test)
    wall = time.perf_counter() - start
    truth = np.asarray(entry.test.labels)
    return RunResult(
        dataset=entry.name,
        config_id=config.config_id,
        accuracy=accuracy(pred, truth),
        balanced_accuracy=balanced_accuracy(pred, truth),
        status="ok",
        wall_time=wall,
    )


def _cell_path(results_dir: str, config_id: str, dataset: str) -> str:
    safe = lambda s: "".join(c if c.isalnum() or c in "-_." else "_" for c in s)
    return os.path.join(results_dir, f"{safe(config_id)}__{safe(dataset)}.json")


def _write_cell(path: str, result: RunResult) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(asdict(result), fh)
    os.replace(tmp, path)


def run_benchmark(
    suite: BenchmarkSuite,
    model_configs: Sequence[ModelConfig],
    fallback_config: DtwConfig = DtwConfig(k=1),
    *,
    jobs: int = 1,
    timeout: float = 300.0,
    results_dir: str | None = None,
    alpha: float = 0.1,
) -> EvaluationReport:
    """Train on train splits, score on test splits; failed or over-time cells are
    substituted with the DTW baseline's scores for that dataset and flagged.

    With `results_dir`, completed cells are persisted as JSON and skipped on
    re-runs (resume support). Cells are independent; execution order does not
    affect the report.
    """
    if results_dir:
        os.makedirs(results_dir, exist_ok=True)

    def cached(cid: str, name: str) -> RunResult | None:
        if not results_dir:
            return None
        path = _cell_path(results_dir, cid, name)
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                return RunResult(**json.load(fh))
        return None

    def store(result: RunResult) -> None:
        if results_dir:
            _write_cell(_cell_path(results_dir, result.config_id, result.dataset), result)

    # DTW fallback scores first: the substitution target must exist for every dataset
    fallback: dict[str, RunResult] = {}
    fb_id = f"__fallback_dtw_{fallback_config.k}nn"
    for entry in suite:
        r = cached(fb_id, entry.name)
        if r is None:
            pred = dtw_knn_classify(entry.train, entry.test, fallback_config)
            truth = np.asarray(entry.test.labels)
            r = RunResult(
                dataset=entry.name,
                config_id=fb_id,
                accuracy=accuracy(pred, truth),
                balanced_accuracy=balanced_accuracy(pred, truth),
                status="ok",
            )
            store(r)
        fallback[entry.name] = r

    def run_cell(args) -> RunResult:
        config, entry = args
        hit = cached(config.config_id, entry.name)
        if hit is not None:
            return hit
        try:
            result = evaluate_cell(config, entry)
            if result.wall_time > timeout:
                raise TimeoutError(f"cell exceeded {timeout}s budget")
        except Exception as exc:  # any per-cell failure triggers the fallback rule
            fb = fallback[entry.name]
            result = RunResult(
                dataset=entry.name,
                config_id=config.config_id,
                accuracy=fb.accuracy,
                balanced_accuracy=fb.balanced_accuracy,
                status="fallback",
                error=f"{type(exc).__name__}: {exc}",
            )
        store(result)
        return result

    cells = [(c, e) for c in model_configs for e in suite]
    if jobs <= 1:
        outcomes = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_cell, cells))
    results = {(r.config_id, r.dataset): r for r in outcomes}
    return EvaluationReport(
        config_ids=[c.config_id for c in model_configs],
        datasets=[(e.name, e.kind) for e in suite],
        results=results,
        alpha=alpha,
        meta={"configs": {c.config_id: {"label": c.label, "aug": c.aug, "type": c.type_, "zs": c.zs} for c in model_configs}},
    )


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

def round_half_up(v: float, places: int = 2) -> float:
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(v))).quantize(q, rounding=ROUND_HALF_UP))


def _fmt(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return f"{round_half_up(v):.2f}"


@dataclass(frozen=True)
class TableRow:
    """One row of the headline accuracy table (six group x augmentation means)."""

    name: str
    type_: str = "-"
    zs: str = "-"
    uni_noaug: float | None = None
    uni_statdiff: float | None = None
    multi_noaug: float | None = None
    multi_statdiff: float | None = None
    overall_noaug: float | None = None
    overall_statdiff: float | None = None

    def cells(self) -> list[float | None]:
        return [
            self.uni_noaug,
            self.uni_statdiff,
            self.multi_noaug,
            self.multi_statdiff,
            self.overall_noaug,
            self.overall_statdiff,
        ]


def render_main_table(rows: Sequence[TableRow]) -> str:
    """Markdown table: Type, ZS, then Univariate/Multivariate/Overall each split
    into No Aug and Stat+Diff. Two-decimal half-up rounding; per-column maxima
    (after rounding, as displayed) are bold."""
    cols = list(zip(*(r.cells() for r in rows)))
    maxima = []
    for col in cols:
        vals = [round_half_up(v) for v in col if v is not None and not math.isnan(v)]
        maxima.append(max(vals) if vals else None)
    lines = [
        "| Model | Type | ZS | Univariate No Aug | Univariate Stat+Diff | Multivariate No Aug | "
        "Multivariate Stat+Diff | Overall No Aug | Overall Stat+Diff |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        cells = []
        for v, mx in zip(r.cells(), maxima):
            text = _fmt(v)
            if v is not None and mx is not None and not math.isnan(v) and round_half_up(v) == mx:
                text = f"**{text}**"
            cells.append(text)
        lines.append("| " + " | ".join([r.name, r.type_, r.zs] + cells) + " |")
    return "\n".join(lines) + "\n"


def report_rows(report: EvaluationReport, metric: str = "accuracy") -> list[TableRow]:
    """Assemble Table-style rows by pairing configs that share a label into
    No Aug / Stat+Diff columns; unpaired configs fill both columns."""
    means = report.group_means(metric)
    info = report.meta.get("configs", {})
    by_label: dict[str, dict[str, int]] = {}
    order: list[str] = []
    for i, cid in enumerate(report.config_ids):
        label = info.get(cid, {}).get("label") or cid
        aug = info.get(cid, {}).get("aug")
        slot = aug if aug in ("noaug", "statdiff") else "both"
        if label not in by_label:
            by_label[label] = {}
            order.append(label)
        by_label[label][slot] = i
    rows = []
    for label in order:
        slots = by_label[label]
        na = slots.get("noaug", slots.get("both"))
        sd = slots.get("statdiff", slots.get("both"))
        any_i = na if na is not None else sd
        cfg = info.get(report.config_ids[any_i], {})

        def g(group, idx):
            return None if idx is None else float(means[group][idx])

        rows.append(
            TableRow(
                name=label,
                type_=cfg.get("type", "-") or "-",
                zs=cfg.get("zs", "-") or "-",
                uni_noaug=g("univariate", na),
                uni_statdiff=g("univariate", sd),
                multi_noaug=g("multivariate", na),
                multi_statdiff=g("multivariate", sd),
                overall_noaug=g("overall", na),
                overall_statdiff=g("overall", sd),
            )
        )
    return rows


def render_report(report: EvaluationReport, style: str = "markdown", metric: str = "accuracy") -> str:
    if style == "markdown":
        out = [render_main_table(report_rows(report, metric))]
        ranks, pmat, reject, groups = report.analysis(metric)
        out.append("\nAverage ranks (lower is better):\n")
        for cid, r in sorted(zip(report.config_ids, ranks), key=lambda t: t[1]):
            out.append(f"- {cid}: {r:.3f}\n")
        if groups:
            out.append("\nNon-separated groups (Wilcoxon + Holm, alpha={:g}):\n".format(report.alpha))
            for g in groups:
                out.append("- {" + ", ".join(report.config_ids[i] for i in sorted(g)) + "}\n")
        return "".join(out)
    if style == "csv":
        lines = ["config,dataset,kind,accuracy,balanced_accuracy,status,wall_time,label,aug,type,zs"]
        info = report.meta.get("configs", {})
        for cid in report.config_ids:
            c = info.get(cid, {})
            tail = ",".join(str(c.get(k) or "") for k in ("label", "aug", "type", "zs"))
            for name, kind in report.datasets:
                r = report.results[(cid, name)]
                lines.append(
                    f"{cid},{name},{kind},{r.accuracy!r},{r.balanced_accuracy!r},{r.status},{r.wall_time!r},{tail}"
                )
        return "\n".join(lines) + "\n"
    if style == "cd-plot-data":
        ranks, pmat, reject, groups = report.analysis(metric)
        lines = [f"alpha {report.alpha!r}"]
        for cid, r in zip(report.config_ids, ranks):
            lines.append(f"rank {cid} {float(r)!r}")
        for g in groups:
            members = sorted(g, key=lambda i: ranks[i])
            lines.append("group " + " ".join(report.config_ids[i] for i in members))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report style {style!r}")
