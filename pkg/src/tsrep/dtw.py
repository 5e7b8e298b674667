"""Dynamic-time-warping distance and k-NN classifier baseline."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset, TimeSeries


@dataclass(frozen=True)
class DtwConfig:
    k: int = 1
    multivariate_mode: str = "dependent"  # "dependent" | "independent"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.multivariate_mode not in ("dependent", "independent"):
            raise ValueError(f"unknown mode {self.multivariate_mode!r}")


def _dtw_cost(cost: np.ndarray) -> float:
    """DP over a Ta x Tb per-step cost matrix, steps {match, insert, delete},
    no warping window. Rolling single-row table."""
    ta, tb = cost.shape
    prev = np.full(tb + 1, np.inf)
    prev[0] = 0.0
    cur = np.empty(tb + 1)
    for i in range(ta):
        cur[0] = np.inf
        row = cost[i]
        for j in range(tb):
            cur[j + 1] = row[j] + min(prev[j], prev[j + 1], cur[j])
        prev, cur = cur, prev
    return float(prev[tb])


def dtw_distance(a: TimeSeries, b: TimeSeries, mode: str = "dependent") -> float:
    """Accumulated squared-Euclidean cost of the optimal monotone alignment.

    No square root is applied. Dependent mode sums squared differences over all
    variates per step; independent mode sums per-variate univariate distances.
    """
    if a.n_variates != b.n_variates:
        raise ValueError(f"variate mismatch: {a.n_variates} vs {b.n_variates}")
    if mode == "independent":
        return sum(
            dtw_distance(TimeSeries(a.values[v]), TimeSeries(b.values[v]), "dependent")
            for v in range(a.n_variates)
        )
    if mode != "dependent":
        raise ValueError(f"unknown mode {mode!r}")
    # per-step cost: squared euclidean across variates
    diff = a.values[:, :, None] - b.values[:, None, :]
    cost = np.sum(diff * diff, axis=0)
    return _dtw_cost(cost)


def dtw_knn_classify(
    train: LabeledDataset, test: LabeledDataset, config: DtwConfig = DtwConfig(), n_jobs: int = 1
) -> np.ndarray:
    """k-NN under DTW distance; vote ties broken by smallest class index, then
    distance ties by smallest training index."""
    if train.n_variates != test.n_variates:
        raise ValueError("train/test variate mismatch")
    if config.k > len(train):
        raise ValueError(f"k={config.k} exceeds training size {len(train)}")
    labels = np.asarray(train.labels, dtype=np.int64)

    def classify_one(ts: TimeSeries) -> int:
        d = np.array([dtw_distance(ts, tr, config.multivariate_mode) for tr in train.samples])
        order = np.argsort(d, kind="stable")[: config.k]  # stable -> smallest index on ties
        counts = np.bincount(labels[order], minlength=train.n_classes)
        return int(np.argmax(counts))

    if n_jobs <= 1:
        return np.array([classify_one(ts) for ts in test.samples], dtype=np.int64)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return np.array(list(pool.map(classify_one, test.samples)), dtype=np.int64)
