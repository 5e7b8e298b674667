"""Wiring between datasets, providers, augmentations, and classifier heads."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .aggregate import AggregationConfig
from .augment import AugmentConfig, build_features
from .classify import LinearTrainConfig, train_forest, train_knn, train_linear
from .core import LabeledDataset
from .dtw import DtwConfig, dtw_knn_classify
from .evaluate import ModelConfig
from .provider import ProviderSpec

CLASSIFIERS = ("forest", "linear", "knn")


def embed_dataset(
    dataset: LabeledDataset,
    spec: ProviderSpec,
    agg: AggregationConfig,
    aug: AugmentConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix (N x F) and label vector for one dataset split."""
    feats = [
        build_features(
            ts, spec, agg, aug, dataset_name=dataset.name, split=dataset.split, sample_index=i
        ).values
        for i, ts in enumerate(dataset.samples)
    ]
    return np.stack(feats), np.asarray(dataset.labels, dtype=np.int64)


def _train_head(classifier: str, X: np.ndarray, y: np.ndarray, seed: int, knn_k: int = 1):
    if classifier == "forest":
        return train_forest(X, y, seed=seed)
    if classifier == "linear":
        return train_linear(X, y, LinearTrainConfig(seed=seed))
    if classifier == "knn":
        return train_knn(X, y, k=knn_k)
    raise ValueError(f"unknown classifier {classifier!r}")


def embedding_runner(
    spec: ProviderSpec,
    agg: AggregationConfig,
    aug: AugmentConfig,
    classifier: str = "forest",
    seed: int = 0,
    knn_k: int = 1,
) -> Callable[[LabeledDataset, LabeledDataset], np.ndarray]:
    """Benchmark-cell runner: embed both splits, train a head, predict the test split."""

    def run(train: LabeledDataset, test: LabeledDataset) -> np.ndarray:
        Xtr, ytr = embed_dataset(train, spec, agg, aug)
        Xte, _ = embed_dataset(test, spec, agg, aug)
        model = _train_head(classifier, Xtr, ytr, seed, knn_k)
        return model.predict(Xte)

    return run


def dtw_runner(config: DtwConfig) -> Callable[[LabeledDataset, LabeledDataset], np.ndarray]:
    def run(train: LabeledDataset, test: LabeledDataset) -> np.ndarray:
        return dtw_knn_classify(train, test, config)

    return run


def model_config_from_dict(d: dict) -> ModelConfig:
    """Build one benchmark column from a config-file entry."""
    cid = d["id"]
    label = d.get("label", cid)
    if d.get("model") == "dtw":
        k = int(d.get("k", 1))
        return ModelConfig(
            config_id=cid,
            runner=dtw_runner(DtwConfig(k=k, multivariate_mode=d.get("mode", "dependent"))),
            label=label,
            aug=d.get("aug_label"),
            type_=d.get("type", "-"),
            zs=d.get("zs", "-"),
        )
    prov = d.get("provider", {})
    spec = ProviderSpec(
        kind=prov.get("kind", "mock"),
        model_id=prov.get("model_id", "mock-default"),
        n_layers=int(prov.get("n_layers", 4)),
        dim=int(prov.get("dim", 32)),
        seed=int(prov.get("seed", 0)),
        directory=prov.get("directory"),
    )
    agg_d = d.get("agg", {})
    agg = AggregationConfig(
        sequence=agg_d.get("sequence", "mean"),
        layer=agg_d.get("layer", "concat"),
        variate=agg_d.get("variate", "concat"),
        layer_normalize=bool(agg_d.get("layer_normalize", True)),
    )
    aug_d = d.get("augment", {})
    aug = AugmentConfig(
        stats=bool(aug_d.get("stats", False)),
        diff=bool(aug_d.get("diff", False)),
        k=int(aug_d.get("k", 8)),
    )
    return ModelConfig(
        config_id=cid,
        runner=embedding_runner(
            spec, agg, aug, classifier=d.get("classifier", "forest"), seed=int(d.get("seed", 0))
        ),
        label=label,
        aug=d.get("aug_label"),
        type_=d.get("type", "-"),
        zs=d.get("zs", "-"),
    )
