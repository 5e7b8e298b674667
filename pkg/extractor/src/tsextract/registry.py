"""Model registry: which checkpoints exist, how to build their architecture,
and where to capture hidden states.

Hook placements are data, not code branches: each model is one JSON entry in
``registry_data/`` (or any extra directory passed at load time) naming the
architecture builder, its parameters, the capture-point module names, the
context limit, and whether the model normalizes its own input.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class ModelHookSpec:
    model_id: str
    architecture: str
    capture_points: tuple[str, ...]
    max_context: int
    model_normalizes: bool = False
    arch_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.capture_points:
            raise RegistryError(f"{self.model_id}: need at least one capture point")
        if self.max_context < 2:
            raise RegistryError(f"{self.model_id}: max_context must be >= 2")


def _spec_from_dict(d: dict, source: str) -> ModelHookSpec:
    try:
        return ModelHookSpec(
            model_id=d["model_id"],
            architecture=d["architecture"],
            capture_points=tuple(d["capture_points"]),
            max_context=int(d["max_context"]),
            model_normalizes=bool(d.get("model_normalizes", False)),
            arch_params=dict(d.get("arch_params", {})),
        )
    except KeyError as exc:
        raise RegistryError(f"{source}: missing registry field {exc}") from None


def load_registry(extra_dirs: tuple[str, ...] = ()) -> dict[str, ModelHookSpec]:
    """Bundled entries first; entries from `extra_dirs` may override them."""
    specs: dict[str, ModelHookSpec] = {}
    data_root = resources.files("tsextract") / "registry_data"
    sources = sorted(p for p in data_root.iterdir() if p.name.endswith(".json"))
    for src in sources:
        spec = _spec_from_dict(json.loads(src.read_text(encoding="utf-8")), str(src))
        specs[spec.model_id] = spec
    for directory in extra_dirs:
        for name in sorted(os.listdir(directory)):
            if not name.endswith(".json"):
                continue
            path = os.path.join(directory, name)
            with open(path, "r", encoding="utf-8") as fh:
                spec = _spec_from_dict(json.load(fh), path)
            specs[spec.model_id] = spec
    return specs


def get_spec(model_id: str, extra_dirs: tuple[str, ...] = ()) -> ModelHookSpec:
    specs = load_registry(extra_dirs)
    if model_id not in specs:
        known = ", ".join(sorted(specs)) or "(none)"
        raise RegistryError(f"unknown model {model_id!r}; registered: {known}")
    return specs[model_id]
