"""Model-agnostic embedding augmentations: absolute patch statistics and
first-order differencing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import AggregationConfig, EmbeddingVector, embed_sample
from .core import TimeSeries
from .provider import ProviderSpec


@dataclass(frozen=True)
class AugmentConfig:
    stats: bool = False
    diff: bool = False
    k: int = 8

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("patch count k must be >= 1")


def _chunk_bounds(t: int, k: int) -> list[tuple[int, int]]:
    return [(i * t // k, (i + 1) * t // k) for i in range(k)]


def patch_statistics(series: TimeSeries, k: int) -> np.ndarray:
    """Per variate, (mean, population std, min, max) over k contiguous chunks.

    Chunk i covers [floor(i*T/k), floor((i+1)*T/k)). When T < k some chunks are
    empty; they reuse the stats of the nearest non-empty chunk before them
    (leading empties reuse the first non-empty chunk), keeping the output width
    fixed at 4*k*V.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t = series.length
    bounds = _chunk_bounds(t, k)
    out = []
    for row in series.values:
        stats: list[tuple[float, float, float, float] | None] = []
        for lo, hi in bounds:
            if hi > lo:
                chunk = row[lo:hi]
                d = chunk - chunk.mean()
                stats.append((chunk.mean(), np.sqrt(np.mean(d * d)), chunk.min(), chunk.max()))
            else:
                stats.append(None)
        first = next(s for s in stats if s is not None)
        filled = []
        prev = first
        for s in stats:
            if s is not None:
                prev = s
            filled.append(prev)
        out.append(np.array(filled, dtype=np.float64).reshape(-1))
    return np.concatenate(out)


def difference(series: TimeSeries) -> TimeSeries:
    """First difference x'_t = x_t - x_{t-1} per variate; output length T-1."""
    if series.length < 2:
        raise ValueError("differencing needs T >= 2")
    return TimeSeries(np.diff(series.values, axis=1))


def build_features(
    series: TimeSeries,
    spec: ProviderSpec,
    agg_config: AggregationConfig,
    aug_config: AugmentConfig,
    *,
    dataset_name: str = "",
    split: str = "train",
    sample_index: int = 0,
) -> EmbeddingVector:
    """[base embedding | differenced embedding (if diff) | patch statistics (if stats)]."""
    kw = dict(dataset_name=dataset_name, split=split, sample_index=sample_index)
    blocks = [embed_sample(series, spec, agg_config, **kw).values]
    if aug_config.diff:
        # file providers hold precomputed states; differenced states live in a
        # sibling "<dataset>-diff" interchange file written by the extractor
        diff_kw = dict(kw)
        if spec.kind == "file":
            diff_kw["dataset_name"] = f"{dataset_name}-diff"
        blocks.append(embed_sample(difference(series), spec, agg_config, **diff_kw).values)
    if aug_config.stats:
        blocks.append(patch_statistics(series, aug_config.k))
    return EmbeddingVector(
        np.concatenate(blocks),
        provenance={"aggregation": agg_config, "augment": aug_config},
    )
