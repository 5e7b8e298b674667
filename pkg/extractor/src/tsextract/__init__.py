"""Adapter that runs frozen forecasting checkpoints over time-series datasets
and writes hidden-state interchange files."""

from .adapter import (
    ARCHITECTURES,
    CheckpointError,
    Extractor,
    HookError,
    PatchMlp,
    StackedGru,
    build_model,
    extract_dataset,
    sha256_file,
)
from .datasets import DatasetError, read_series
from .interchange import FORMAT_VERSION, interchange_path, write_interchange
from .registry import ModelHookSpec, RegistryError, get_spec, load_registry

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "CheckpointError",
    "DatasetError",
    "Extractor",
    "FORMAT_VERSION",
    "HookError",
    "ModelHookSpec",
    "PatchMlp",
    "RegistryError",
    "StackedGru",
    "build_model",
    "extract_dataset",
    "get_spec",
    "interchange_path",
    "load_registry",
    "read_series",
    "sha256_file",
    "write_interchange",
]
