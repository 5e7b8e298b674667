import numpy as np

from tsrep.core import LabeledDataset, TimeSeries


def dyadic_series(tiles: int = 4, offset: float = 5.0) -> np.ndarray:
    """Integer-valued series whose population variance is a perfect dyadic square
    (6.25), so instance normalization is bit-exact under scaling by 0.5/2/10 and
    integer shifts."""
    pattern = np.array([0.0, 3.0, 4.0, 0.0, -3.0, -4.0, 0.0, 0.0])
    return offset + np.tile(pattern, tiles)


def random_dataset(rng: np.random.Generator, n: int = 10, v: int = 1, k: int = 3, t: int = 12) -> LabeledDataset:
    labels = list(range(k)) + [int(x) for x in rng.integers(0, k, size=n - k)]
    samples = [TimeSeries(rng.standard_normal((v, t))) for _ in range(n)]
    return LabeledDataset(name="rand", samples=tuple(samples), labels=tuple(labels), n_classes=k)
