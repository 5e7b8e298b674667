"""Writer for the hidden-state interchange format.

Layout: [u32 header_len][header JSON utf-8][payload][u32 CRC32(payload)];
payload holds, per sample / variate / layer, a u32 sequence length followed by
the seq' x D activation matrix as little-endian f32, row-major. Extra header
keys beyond the core set are permitted (readers ignore them). Files are
written to a temporary path and atomically renamed into place.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1


def interchange_path(directory: str, dataset_name: str, split: str) -> str:
    return os.path.join(str(directory), f"{dataset_name}_{split}.hst")


def write_interchange(
    path: str,
    states: Sequence[Sequence[Sequence[np.ndarray]]],
    model_id: str,
    dataset: str,
    split: str,
    extra_header: dict | None = None,
) -> None:
    """states[sample][variate] is a list of L per-layer (seq'_l x D_l) arrays."""
    n = len(states)
    if n == 0:
        raise ValueError("no samples")
    v = len(states[0])
    dims = [int(m.shape[1]) for m in states[0][0]]
    header = {
        "format_version": FORMAT_VERSION,
        "model_id": model_id,
        "dataset": dataset,
        "split": split,
        "N": n,
        "V": v,
        "L": len(dims),
        "dims": dims,
        "dtype": "f32",
        "endianness": "little",
    }
    if extra_header:
        for key in extra_header:
            if key in header:
                raise ValueError(f"extra header key {key!r} collides with a core field")
        header.update(extra_header)
    payload = bytearray()
    for sample in states:
        if len(sample) != v:
            raise ValueError("inconsistent variate count")
        for layers in sample:
            if [int(m.shape[1]) for m in layers] != dims:
                raise ValueError("inconsistent layer widths")
            for m in layers:
                if m.ndim != 2 or m.shape[0] < 1:
                    raise ValueError("each layer must be a non-empty 2-D matrix")
                if not np.all(np.isfinite(m)):
                    raise ValueError("non-finite activation")
                payload += struct.pack("<I", int(m.shape[0]))
                payload += np.ascontiguousarray(m, dtype="<f4").tobytes()
    blob = bytes(payload)
    header_bytes = json.dumps(header).encode("utf-8")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob)))
    os.replace(tmp, path)
