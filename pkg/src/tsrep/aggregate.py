"""Aggregation algebra: hidden states of all variates -> one fixed-size embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TimeSeries
from .provider import HiddenStates, ProviderSpec, file_extract, mock_extract

SEQUENCE_STRATEGIES = ("mean", "max", "last")
LAYER_STRATEGIES = ("concat", "mean", "max", "last")
VARIATE_STRATEGIES = ("concat", "mean", "max")


@dataclass(frozen=True)
class AggregationConfig:
    sequence: str = "mean"
    layer: str = "concat"
    variate: str = "concat"
    layer_normalize: bool = True

    def __post_init__(self):
        if self.sequence not in SEQUENCE_STRATEGIES:
            raise ValueError(f"unknown sequence strategy {self.sequence!r}")
        if self.layer not in LAYER_STRATEGIES:
            raise ValueError(f"unknown layer strategy {self.layer!r}")
        if self.variate not in VARIATE_STRATEGIES:
            raise ValueError(f"unknown variate strategy {self.variate!r}")


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    provenance: dict

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size < 1:
            raise ValueError("empty embedding")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite embedding value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def aggregate_sequence(layer_matrix: np.ndarray, strategy: str) -> np.ndarray:
    m = np.asarray(layer_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ValueError("layer matrix must be a non-empty seq' x D matrix")
    if strategy == "mean":
        return m.mean(axis=0)
    if strategy == "max":
        return m.max(axis=0)
    if strategy == "last":
        return m[-1].copy()
    raise ValueError(f"unknown sequence strategy {strategy!r}")


def normalize_layer_vector(v: np.ndarray) -> np.ndarray:
    """Z-normalize a vector over its own components; constant vectors map to zero."""
    v = np.asarray(v, dtype=np.float64)
    d = v - v.mean()
    std = np.sqrt(np.mean(d * d))
    if std < 1e-12:
        return np.zeros_like(d)
    return d / std


def _pool(vectors: list[np.ndarray], strategy: str, what: str) -> np.ndarray:
    if strategy == "concat":
        return np.concatenate(vectors)
    if len({v.shape[0] for v in vectors}) != 1:
        raise ValueError(f"{what} strategy {strategy!r} requires equal vector lengths")
    stacked = np.stack(vectors)
    if strategy == "mean":
        return stacked.mean(axis=0)
    if strategy == "max":
        return stacked.max(axis=0)
    if strategy == "last":
        return stacked[-1]
    raise ValueError(f"unknown {what} strategy {strategy!r}")


def aggregate_layers(per_layer: list[np.ndarray], strategy: str, normalize: bool) -> np.ndarray:
    if len(per_layer) < 1:
        raise ValueError("need at least one layer vector")
    vectors = [np.asarray(v, dtype=np.float64).reshape(-1) for v in per_layer]
    if normalize:
        vectors = [normalize_layer_vector(v) for v in vectors]
    return _pool(vectors, strategy, "layer")


def aggregate_variates(per_variate: list[np.ndarray], strategy: str) -> np.ndarray:
    if len(per_variate) < 1:
        raise ValueError("need at least one variate vector")
    vectors = [np.asarray(v, dtype=np.float64).reshape(-1) for v in per_variate]
    return _pool(vectors, strategy, "variate")


def extract_variate(
    row: np.ndarray,
    spec: ProviderSpec,
    *,
    dataset_name: str = "",
    split: str = "train",
    sample_index: int = 0,
    variate_index: int = 0,
) -> HiddenStates:
    if spec.kind == "mock":
        return mock_extract(row, spec)
    return file_extract(dataset_name, split, sample_index, variate_index, spec)


def embed_sample(
    series: TimeSeries,
    spec: ProviderSpec,
    config: AggregationConfig,
    *,
    dataset_name: str = "",
    split: str = "train",
    sample_index: int = 0,
) -> EmbeddingVector:
    """Extract and aggregate one sample into a fixed-size embedding.

    Per variate: provider -> per-layer sequence pooling -> layer aggregation
    (optionally normalized), then variate aggregation. The output width does
    not depend on the series length.
    """
    per_variate = []
    for v in range(series.n_variates):
        hs = extract_variate(
            series.values[v],
            spec,
            dataset_name=dataset_name,
            split=split,
            sample_index=sample_index,
            variate_index=v,
        )
        per_layer = [aggregate_sequence(m, config.sequence) for m in hs.layers]
        per_variate.append(aggregate_layers(per_layer, config.layer, config.layer_normalize))
    values = aggregate_variates(per_variate, config.variate)
    return EmbeddingVector(values, provenance={"aggregation": config, "augment": None})
