"""Embedding providers: per-layer hidden states from a deterministic mock model
or from hidden-state interchange files written by an external extractor."""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1
PATCH_WIDTH = 16
MOCK_DEFAULT_LAYERS = 4
MOCK_DEFAULT_DIM = 32


class InterchangeError(ValueError):
    """Raised for malformed, truncated, or inconsistent hidden-state files."""


@dataclass(frozen=True)
class HiddenStates:
    """Per-layer activation matrices (seq'_l x D_l); lengths and widths may differ per layer."""

    layers: tuple[np.ndarray, ...]

    def __post_init__(self):
        layers = tuple(np.asarray(m, dtype=np.float64) for m in self.layers)
        if len(layers) < 1:
            raise ValueError("need at least one layer")
        for m in layers:
            if m.ndim != 2 or m.size == 0:
                raise ValueError("each layer must be a non-empty 2-D matrix")
            if not np.all(np.isfinite(m)):
                raise ValueError("non-finite activation")
            m.setflags(write=False)
        object.__setattr__(self, "layers", layers)

    @property
    def n_layers(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class ProviderSpec:
    kind: str = "mock"  # "mock" | "file"
    model_id: str = "mock-default"
    n_layers: int = MOCK_DEFAULT_LAYERS
    dim: int = MOCK_DEFAULT_DIM
    seed: int = 0
    nonlinearity: str = "tanh"
    directory: str | None = None

    def __post_init__(self):
        if self.kind not in ("mock", "file"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "mock" and (self.n_layers < 1 or self.dim < 1):
            raise ValueError("mock provider needs n_layers >= 1 and dim >= 1")
        if self.kind == "file" and not self.directory:
            raise ValueError("file provider needs a directory")


def instance_normalize(x: np.ndarray) -> np.ndarray:
    """Subtract mean and divide by population std; near-constant input divides by 1."""
    x = np.asarray(x, dtype=np.float64)
    d = x - x.mean()
    std = np.sqrt(np.mean(d * d))
    if std < 1e-12:
        # constant input: flush rounding residue so all constant series map to
        # exactly the same (all-zero) normalized input
        return np.zeros_like(d)
    return d / std


def _patchify(x: np.ndarray, width: int = PATCH_WIDTH) -> np.ndarray:
    """Split into non-overlapping windows of `width`, zero-padding the tail."""
    t = x.shape[0]
    n = -(-t // width)
    padded = np.zeros(n * width, dtype=np.float64)
    padded[:t] = x
    return padded.reshape(n, width)


def _mock_weights(spec: ProviderSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    digest = hashlib.sha256(f"{spec.model_id}|{spec.seed}".encode()).digest()
    rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))
    weights = []
    in_dim = PATCH_WIDTH
    for _ in range(spec.n_layers):
        W = rng.standard_normal((in_dim, spec.dim)) / np.sqrt(in_dim)
        b = rng.standard_normal(spec.dim) * 0.1
        weights.append((W, b))
        in_dim = spec.dim
    return weights


def mock_extract(series_row: np.ndarray, spec: ProviderSpec) -> HiddenStates:
    """Deterministic stand-in for a frozen sequence model.

    Instance-normalizes the input, patchifies it into windows of 16 steps, and
    pushes the patches through seeded fixed random affine maps with tanh.
    Output is invariant to positive scaling and shifting of the input.
    """
    if spec.kind != "mock":
        raise ValueError("mock_extract requires a mock ProviderSpec")
    x = np.asarray(series_row, dtype=np.float64).reshape(-1)
    if x.shape[0] < 2:
        raise ValueError("series must have T >= 2")
    h = _patchify(instance_normalize(x))
    layers = []
    for W, b in _mock_weights(spec):
        h = np.tanh(h @ W + b)
        layers.append(h)
    return HiddenStates(tuple(layers))


# ---------------------------------------------------------------------------
# Hidden-state interchange format
#
# [u32 header_len][header JSON utf-8][payload][u32 CRC32(payload)]
# payload: per sample, per variate, per layer: u32 seq'_l then seq'_l x D_l
# little-endian f32, row-major.
# ---------------------------------------------------------------------------

def write_hidden_states(
    path,
    states: Sequence[Sequence[HiddenStates]],
    model_id: str,
    dataset: str,
    split: str,
) -> None:
    """Write one interchange file: states[sample][variate] -> HiddenStates."""
    n = len(states)
    if n == 0:
        raise ValueError("no samples")
    v = len(states[0])
    dims = [m.shape[1] for m in states[0][0].layers]
    L = len(dims)
    header = {
        "format_version": FORMAT_VERSION,
        "model_id": model_id,
        "dataset": dataset,
        "split": split,
        "N": n,
        "V": v,
        "L": L,
        "dims": dims,
        "dtype": "f32",
        "endianness": "little",
    }
    payload = bytearray()
    for sample in states:
        if len(sample) != v:
            raise ValueError("inconsistent variate count")
        for hs in sample:
            if [m.shape[1] for m in hs.layers] != dims:
                raise ValueError("inconsistent layer widths")
            for m in hs.layers:
                payload += struct.pack("<I", m.shape[0])
                payload += np.ascontiguousarray(m, dtype="<f4").tobytes()
    blob = bytes(payload)
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob)))


class HiddenStateFile:
    """Reader for one interchange file; parses the per-record index once."""

    def __init__(self, path):
        self.path = str(path)
        with open(path, "rb") as fh:
            data = fh.read()
        if len(data) < 8:
            raise InterchangeError(f"{path}: truncated file")
        (hlen,) = struct.unpack_from("<I", data, 0)
        if 4 + hlen + 4 > len(data):
            raise InterchangeError(f"{path}: truncated header")
        try:
            self.header = json.loads(data[4 : 4 + hlen].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InterchangeError(f"{path}: bad header ({exc})") from None
        payload = data[4 + hlen : -4]
        (crc,) = struct.unpack_from("<I", data, len(data) - 4)
        if zlib.crc32(payload) != crc:
            raise InterchangeError(f"{path}: payload checksum mismatch")
        self.n = int(self.header["N"])
        self.v = int(self.header["V"])
        self.dims = [int(d) for d in self.header["dims"]]
        self._records: list[list[HiddenStates]] = []
        off = 0
        for _ in range(self.n):
            sample = []
            for _ in range(self.v):
                layers = []
                for d in self.dims:
                    if off + 4 > len(payload):
                        raise InterchangeError(f"{path}: payload shorter than header promises")
                    (seq,) = struct.unpack_from("<I", payload, off)
                    off += 4
                    nbytes = seq * d * 4
                    if seq < 1 or off + nbytes > len(payload):
                        raise InterchangeError(f"{path}: shape inconsistency in payload")
                    m = np.frombuffer(payload, dtype="<f4", count=seq * d, offset=off).reshape(seq, d)
                    layers.append(m.astype(np.float64))
                    off += nbytes
                sample.append(HiddenStates(tuple(layers)))
            self._records.append(sample)
        if off != len(payload):
            raise InterchangeError(f"{path}: trailing bytes in payload")

    def get(self, sample_index: int, variate_index: int) -> HiddenStates:
        if not (0 <= sample_index < self.n):
            raise InterchangeError(f"sample index {sample_index} out of range [0, {self.n})")
        if not (0 <= variate_index < self.v):
            raise InterchangeError(f"variate {variate_index} out of range [0, {self.v})")
        return self._records[sample_index][variate_index]


def interchange_path(directory, dataset_name: str, split: str) -> str:
    import os

    return os.path.join(str(directory), f"{dataset_name}_{split}.hst")


_FILE_CACHE: dict[str, HiddenStateFile] = {}


def file_extract(
    dataset_name: str, split: str, sample_index: int, variate_index: int, spec: ProviderSpec
) -> HiddenStates:
    if spec.kind != "file":
        raise ValueError("file_extract requires a file ProviderSpec")
    path = interchange_path(spec.directory, dataset_name, split)
    f = _FILE_CACHE.get(path)
    if f is None:
        f = HiddenStateFile(path)
        _FILE_CACHE[path] = f
    return f.get(sample_index, variate_index)
