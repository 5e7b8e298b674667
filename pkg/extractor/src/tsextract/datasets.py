"""Minimal reader for the labeled time-series text format.

One sample per line: ``<label>:<v1,t1,...>[;<v2,t1,...>]`` with ``#`` comment
lines. The extractor only needs the series values; labels are parsed for
validation but not used.
"""

from __future__ import annotations

import numpy as np


class DatasetError(ValueError):
    pass


def read_series(path: str) -> list[np.ndarray]:
    """Parse a dataset file into a list of V x T arrays."""
    samples: list[np.ndarray] = []
    n_variates = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                label_text, _, body = line.partition(":")
                int(label_text)
                variates = [
                    np.array([float(v) for v in part.split(",")], dtype=np.float64)
                    for part in body.split(";")
                ]
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
            lengths = {len(v) for v in variates}
            if len(lengths) != 1:
                raise DatasetError(f"{path}:{lineno}: variates differ in length")
            values = np.stack(variates)
            if not np.all(np.isfinite(values)):
                raise DatasetError(f"{path}:{lineno}: non-finite value")
            if n_variates is None:
                n_variates = values.shape[0]
            elif values.shape[0] != n_variates:
                raise DatasetError(f"{path}:{lineno}: inconsistent variate count")
            samples.append(values)
    if not samples:
        raise DatasetError(f"{path}: no samples")
    return samples
