"""Domain types, dataset container, text-format I/O, length filtering, and synthetic generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DatasetFormatError(ValueError):
    """Raised when a dataset file violates the text format or a dataset invariant."""


@dataclass(frozen=True)
class TimeSeries:
    """One labeled sample's raw values: V variates x T steps (row = variate)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"values must be V x T with V,T >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite value in time series")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_variates(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabeledDataset:
    name: str
    samples: tuple[TimeSeries, ...]
    labels: tuple[int, ...]
    n_classes: int
    split: str = "train"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))
        if len(self.samples) != len(self.labels) or len(self.samples) < 1:
            raise ValueError("need |samples| = |labels| >= 1")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if any(l < 0 or l >= self.n_classes for l in self.labels):
            raise ValueError("label out of range")
        vset = {s.n_variates for s in self.samples}
        if len(vset) != 1:
            raise ValueError("inconsistent variate count")
        if self.split not in ("train", "test"):
            raise ValueError(f"unknown split {self.split!r}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def n_variates(self) -> int:
        return self.samples[0].n_variates

    @property
    def max_length(self) -> int:
        return max(s.length for s in self.samples)


@dataclass(frozen=True)
class SuiteEntry:
    train: LabeledDataset
    test: LabeledDataset
    kind: str  # "univariate" | "multivariate"

    def __post_init__(self):
        if self.train.name != self.test.name:
            raise ValueError("train/test name mismatch")
        if self.train.n_classes != self.test.n_classes:
            raise ValueError("train/test class-count mismatch")
        if self.train.n_variates != self.test.n_variates:
            raise ValueError("train/test variate-count mismatch")
        if self.kind not in ("univariate", "multivariate"):
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def name(self) -> str:
        return self.train.name

    @property
    def max_length(self) -> int:
        return max(self.train.max_length, self.test.max_length)


@dataclass(frozen=True)
class BenchmarkSuite:
    datasets: tuple[SuiteEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))

    def __len__(self) -> int:
        return len(self.datasets)

    def __iter__(self):
        return iter(self.datasets)


# ---------------------------------------------------------------------------
# Text format I/O
#
# One sample per line: `<label>:<v1,1>,...,<v1,T>[;<v2,1>,...]`
# Variates separated by `;`, values by `,`. Blank lines and `#` comments ignored.
# ---------------------------------------------------------------------------

def load_dataset(path, name: str | None = None, split: str = "train") -> LabeledDataset:
    raw_labels: list[str] = []
    samples: list[TimeSeries] = []
    declared_k: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if line.startswith("# classes:"):
                declared_k = int(line.split(":", 1)[1])
                continue
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise DatasetFormatError(f"{path}: line {lineno}: missing ':' label separator")
            label, _, payload = line.partition(":")
            label = label.strip()
            if not label:
                raise DatasetFormatError(f"{path}: line {lineno}: empty label")
            rows = []
            for variate in payload.split(";"):
                try:
                    row = [float(tok) for tok in variate.split(",")]
                except ValueError as exc:
                    raise DatasetFormatError(f"{path}: line {lineno}: bad value ({exc})") from None
                rows.append(row)
            if len({len(r) for r in rows}) != 1:
                raise DatasetFormatError(f"{path}: line {lineno}: variates differ in length")
            values = np.array(rows, dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise DatasetFormatError(f"{path}: line {lineno}: non-finite value")
            raw_labels.append(label)
            samples.append(TimeSeries(values))
    if not samples:
        raise DatasetFormatError(f"{path}: empty file")
    vset = {s.n_variates for s in samples}
    if len(vset) != 1:
        raise DatasetFormatError(f"{path}: inconsistent variate count across samples: {sorted(vset)}")
    if declared_k is not None:
        # integer-coded file written by write_dataset: labels taken verbatim
        if not all(_is_canonical_int(s) for s in raw_labels):
            raise DatasetFormatError(f"{path}: '# classes:' header requires integer labels")
        labels = tuple(int(s) for s in raw_labels)
        n_classes = declared_k
        if any(l >= n_classes for l in labels):
            raise DatasetFormatError(f"{path}: label exceeds declared class count {n_classes}")
    else:
        labels, n_classes = _remap_labels(raw_labels)
    return LabeledDataset(
        name=name if name is not None else _stem(path),
        samples=tuple(samples),
        labels=labels,
        n_classes=n_classes,
        split=split,
    )


def _stem(path) -> str:
    import os

    base = os.path.basename(str(path))
    return base.rsplit(".", 1)[0] if "." in base else base


def _remap_labels(raw: Sequence[str]) -> tuple[tuple[int, ...], int]:
    """Map label strings to contiguous [0, K).

    If every label already is a canonical integer and the label set is exactly
    {0..K-1}, labels are kept verbatim, which makes write/load round-trips the
    identity. Otherwise labels are remapped in first-occurrence order.
    """
    distinct = sorted(set(raw))
    if all(_is_canonical_int(s) for s in distinct):
        ints = sorted(int(s) for s in distinct)
        if ints == list(range(len(ints))) and len(ints) >= 2:
            return tuple(int(s) for s in raw), len(ints)
    order: dict[str, int] = {}
    for s in raw:
        if s not in order:
            order[s] = len(order)
    return tuple(order[s] for s in raw), len(order)


def _is_canonical_int(s: str) -> bool:
    return s.isdigit() and (s == "0" or not s.startswith("0"))


def write_dataset(dataset: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# classes: {dataset.n_classes}\n")
        if "baselines" in dataset.metadata:
            fh.write("# baselines: " + ",".join(repr(float(a)) for a in dataset.metadata["baselines"]) + "\n")
        for ts, label in zip(dataset.samples, dataset.labels):
            payload = ";".join(",".join(repr(float(x)) for x in row) for row in ts.values)
            fh.write(f"{label}:{payload}\n")


def read_baselines(path) -> np.ndarray:
    """Read the per-sample baseline side channel written by write_dataset for toy sets."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# baselines:"):
                return np.array([float(tok) for tok in line.split(":", 1)[1].split(",")])
            if line and not line.startswith("#"):
                break
    raise DatasetFormatError(f"{path}: no baseline header")


# ---------------------------------------------------------------------------
# Filtering and synthetic generators
# ---------------------------------------------------------------------------

def filter_by_length(suite: BenchmarkSuite, max_len: int) -> BenchmarkSuite:
    """Keep datasets whose maximum series length over train+test is <= max_len.

    max_len=0 is the no-filter sentinel.
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    if max_len == 0:
        return suite
    return BenchmarkSuite(tuple(e for e in suite if e.max_length <= max_len))


TOY_LENGTH = 256
TOY_BASELINE_RANGE = (-2.0, 2.0)
TOY_CLASSES = 4


def generate_sine_toy(n: int, seed: int, split: str = "train") -> LabeledDataset:
    """Sine waves that differ only by a per-sample constant baseline.

    y_t = sin(5 t) + a with t on a uniform grid over [0, 2pi) of 256 points and
    a ~ U[-2, 2]. Labels are the quartile bin of a (4 classes); the continuous
    baselines are kept in metadata["baselines"].
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = TOY_BASELINE_RANGE
    baselines = rng.uniform(lo, hi, size=n)
    t = 2.0 * np.pi * np.arange(TOY_LENGTH) / TOY_LENGTH
    base = np.sin(5.0 * t)
    samples = tuple(TimeSeries(base + a) for a in baselines)
    # quartile labels; ranks avoid edge issues with duplicate quantile edges
    order = np.argsort(baselines, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    labels = np.minimum((ranks * TOY_CLASSES) // max(n, 1), TOY_CLASSES - 1)
    return LabeledDataset(
        name="sine-toy",
        samples=samples,
        labels=tuple(int(l) for l in labels),
        n_classes=TOY_CLASSES,
        split=split,
        metadata={"baselines": baselines},
    )


def generate_blobs(n_per_class: int, dims: int, separation: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two unit-variance Gaussian clusters with means +-separation/2 along coordinate 0."""
    if n_per_class < 1 or dims < 1:
        raise ValueError("n_per_class and dims must be >= 1")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2 * n_per_class, dims))
    X[:n_per_class, 0] -= separation / 2.0
    X[n_per_class:, 0] += separation / 2.0
    y = np.concatenate([np.zeros(n_per_class, dtype=np.int64), np.ones(n_per_class, dtype=np.int64)])
    return X, y
