import pytest
import torch

from tsextract.adapter import build_model
from tsextract.registry import get_spec


@pytest.fixture(scope="session")
def gru_spec():
    return get_spec("tiny-gru-2l")


@pytest.fixture(scope="session")
def patch_spec():
    return get_spec("tiny-patch-1l")


@pytest.fixture(scope="session")
def gru_checkpoint(tmp_path_factory, gru_spec):
    torch.manual_seed(7)
    model = build_model(gru_spec)
    path = tmp_path_factory.mktemp("ckpt") / "tiny_gru.pt"
    torch.save(model.state_dict(), path)
    return str(path)


@pytest.fixture(scope="session")
def patch_checkpoint(tmp_path_factory, patch_spec):
    torch.manual_seed(8)
    model = build_model(patch_spec)
    path = tmp_path_factory.mktemp("ckpt") / "tiny_patch.pt"
    torch.save(model.state_dict(), path)
    return str(path)
