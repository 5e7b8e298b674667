import pytest

from tsrep.core import generate_blobs


@pytest.fixture(scope="session")
def blobs_fixture():
    Xtr, ytr = generate_blobs(20, 2, 10.0, seed=3)
    Xte, yte = generate_blobs(20, 2, 10.0, seed=103)
    return Xtr, ytr, Xte, yte
