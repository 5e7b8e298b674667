"""Frozen-checkpoint extraction: build the registered architecture, load the
checkpoint, hook the capture points, and run every variate of every sample
through the model in eval mode with no gradient tracking.

Series longer than the model's context are truncated to the most recent
context-length steps; the interchange header records how many samples were
affected. The checkpoint file is hashed before and after extraction to back
the frozen-model guarantee.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np
import torch
from torch import nn

from .datasets import read_series
from .interchange import interchange_path, write_interchange
from .registry import ModelHookSpec


class CheckpointError(ValueError):
    pass


class HookError(ValueError):
    pass


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Architectures
# ---------------------------------------------------------------------------

class StackedGru(nn.Module):
    """Point-forecaster: input projection, a stack of single-layer GRU blocks,
    linear head. Each block is a separate module so every depth is hookable."""

    def __init__(self, hidden: int = 24, blocks: int = 2):
        super().__init__()
        self.embed = nn.Linear(1, hidden)
        self.blocks = nn.ModuleList(
            [nn.GRU(hidden, hidden, batch_first=True) for _ in range(blocks)]
        )
        self.head = nn.Linear(hidden, 1)

    def forward(self, x):  # x: (B, T, 1)
        h = self.embed(x)
        for block in self.blocks:
            h, _ = block(h)
        return self.head(h[:, -1])


class PatchMlp(nn.Module):
    """Single-encoder forecaster over non-overlapping patches (models whose
    extraction API exposes exactly one representation)."""

    def __init__(self, patch: int = 8, hidden: int = 16):
        super().__init__()
        self.patch = patch
        self.encoder = nn.Sequential(nn.Linear(patch, hidden), nn.Tanh(), nn.Linear(hidden, hidden))
        self.head = nn.Linear(hidden, 1)

    def forward(self, x):  # x: (B, T, 1)
        b, t, _ = x.shape
        n = -(-t // self.patch)
        padded = torch.zeros(b, n * self.patch, dtype=x.dtype, device=x.device)
        padded[:, :t] = x[:, :, 0]
        h = self.encoder(padded.reshape(b, n, self.patch))  # (B, n, hidden)
        return self.head(h.mean(dim=1))


ARCHITECTURES = {
    "stacked_gru": StackedGru,
    "patch_mlp": PatchMlp,
}


def build_model(spec: ModelHookSpec) -> nn.Module:
    if spec.architecture not in ARCHITECTURES:
        raise CheckpointError(
            f"{spec.model_id}: unknown architecture {spec.architecture!r}; "
            f"available: {', '.join(sorted(ARCHITECTURES))}"
        )
    return ARCHITECTURES[spec.architecture](**spec.arch_params)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _normalize(row: np.ndarray) -> np.ndarray:
    d = row - row.mean()
    std = np.sqrt(np.mean(d * d))
    return d if std < 1e-12 else d / std


def _as_layer_matrix(out) -> torch.Tensor:
    """Coerce one hook capture for one batch row into a (seq', D) matrix."""
    if isinstance(out, tuple):
        out = out[0]
    if out.ndim == 1:
        out = out.unsqueeze(0)
    if out.ndim != 2:
        raise HookError(f"capture produced a {out.ndim}-d tensor per sample; expected 1-d or 2-d")
    return out


class Extractor:
    """One loaded frozen model with its capture hooks attached."""

    def __init__(self, spec: ModelHookSpec, checkpoint_path: str, device: str = "cpu"):
        if not os.path.exists(checkpoint_path):
            raise CheckpointError(f"checkpoint not found: {checkpoint_path}")
        self.spec = spec
        self.checkpoint_path = checkpoint_path
        self.checkpoint_sha256 = sha256_file(checkpoint_path)
        self.device = torch.device(device)
        self.model = build_model(spec)
        state = torch.load(checkpoint_path, map_location=self.device, weights_only=True)
        try:
            self.model.load_state_dict(state)
        except RuntimeError as exc:
            raise CheckpointError(f"{checkpoint_path}: state does not fit {spec.architecture}: {exc}") from None
        self.model.to(self.device).eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        modules = dict(self.model.named_modules())
        missing = [n for n in spec.capture_points if n not in modules]
        if missing:
            raise HookError(
                f"{spec.model_id}: capture points not in model: {missing}; "
                f"available: {sorted(n for n in modules if n)}"
            )
        self._captured: dict[str, torch.Tensor] = {}
        for name in spec.capture_points:
            modules[name].register_forward_hook(self._make_hook(name))

    def _make_hook(self, name: str):
        def hook(_module, _inputs, output):
            self._captured[name] = output[0] if isinstance(output, tuple) else output

        return hook

    def _prepare_row(self, row: np.ndarray) -> np.ndarray:
        if row.shape[0] > self.spec.max_context:
            row = row[-self.spec.max_context :]
        if not self.spec.model_normalizes:
            row = _normalize(row)
        return row.astype(np.float32)

    def extract_rows(self, rows: list[np.ndarray]) -> list[list[np.ndarray]]:
        """Run a batch of equal-length univariate rows; returns per-row layer lists."""
        x = torch.from_numpy(np.stack(rows)).unsqueeze(-1).to(self.device)
        self._captured.clear()
        with torch.no_grad():
            self.model(x)
        per_row: list[list[np.ndarray]] = [[] for _ in rows]
        for name in self.spec.capture_points:
            if name not in self._captured:
                raise HookError(f"{self.spec.model_id}: capture point {name!r} saw no forward pass")
            out = self._captured[name]
            for i in range(len(rows)):
                per_row[i].append(_as_layer_matrix(out[i]).cpu().numpy().astype(np.float32))
        return per_row

    def extract_series(self, values: np.ndarray, batch: int = 1) -> list[list[np.ndarray]]:
        """V x T sample -> per-variate list of L layer matrices (independent
        univariate passes, batched over variates of equal prepared length)."""
        rows = [self._prepare_row(values[v]) for v in range(values.shape[0])]
        out: list[list[np.ndarray] | None] = [None] * len(rows)
        pending: list[int] = []

        def flush():
            if not pending:
                return
            for idx, layers in zip(pending, self.extract_rows([rows[i] for i in pending])):
                out[idx] = layers
            pending.clear()

        for i, row in enumerate(rows):
            if pending and (len(pending) >= max(1, batch) or rows[pending[0]].shape != row.shape):
                flush()
            pending.append(i)
        flush()
        return out  # type: ignore[return-value]


def extract_dataset(
    dataset_path: str,
    spec: ModelHookSpec,
    out_dir: str,
    checkpoint_path: str,
    *,
    split: str = "train",
    dataset_name: str | None = None,
    device: str = "cpu",
    batch: int = 1,
) -> str:
    """Extract every sample of a dataset file into one interchange file;
    returns the written path."""
    samples = read_series(dataset_path)
    if dataset_name is None:
        stem = os.path.splitext(os.path.basename(dataset_path))[0]
        dataset_name = stem[: -len(f"_{split}")] if stem.endswith(f"_{split}") else stem
    extractor = Extractor(spec, checkpoint_path, device=device)
    truncated = sum(1 for s in samples if s.shape[1] > spec.max_context)
    states = [extractor.extract_series(s, batch=batch) for s in samples]
    after = sha256_file(checkpoint_path)
    if after != extractor.checkpoint_sha256:
        raise CheckpointError(
            f"{checkpoint_path}: checkpoint changed during extraction "
            f"({extractor.checkpoint_sha256} -> {after})"
        )
    os.makedirs(out_dir, exist_ok=True)
    path = interchange_path(out_dir, dataset_name, split)
    write_interchange(
        path,
        states,
        spec.model_id,
        dataset_name,
        split,
        extra_header={
            "checkpoint_sha256": extractor.checkpoint_sha256,
            "max_context": spec.max_context,
            "truncated_samples": truncated,
            "adapter_normalized": not spec.model_normalizes,
        },
    )
    return path
