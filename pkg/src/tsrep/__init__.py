"""tsrep: fixed-size time-series embeddings from frozen sequence models,
embedding augmentations, lightweight classifier heads, and a rank-based
benchmark harness with critical-difference grouping."""

from .aggregate import AggregationConfig, EmbeddingVector, aggregate_layers, aggregate_sequence, aggregate_variates, embed_sample, normalize_layer_vector
from .augment import AugmentConfig, build_features, difference, patch_statistics
from .classify import LinearTrainConfig, TrainedClassifier, knn_predict, train_forest, train_knn, train_linear
from .core import (
    BenchmarkSuite,
    LabeledDataset,
    SuiteEntry,
    TimeSeries,
    filter_by_length,
    generate_blobs,
    generate_sine_toy,
    load_dataset,
    write_dataset,
)
from .dtw import DtwConfig, dtw_distance, dtw_knn_classify
from .evaluate import (
    EvaluationReport,
    ModelConfig,
    RunResult,
    TableRow,
    accuracy,
    average_ranks,
    balanced_accuracy,
    cd_groups,
    holm_correction,
    pca_project,
    render_main_table,
    render_report,
    run_benchmark,
    score_correlation,
    wilcoxon_signed_rank,
)
from .provider import HiddenStates, ProviderSpec, file_extract, mock_extract, write_hidden_states

__version__ = "0.1.0"
