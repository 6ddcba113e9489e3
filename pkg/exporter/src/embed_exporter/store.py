"""Writer for the EMBV binary vector store format.

Layout (little-endian): magic "EMBV", u32 version=1, u32 dim, u64 count,
then per key: u32 key byte-length, UTF-8 key bytes, dim float32 values.
Keys are written in sorted order. This mirrors the consumer toolkit's
reader byte for byte; the file format is the only coupling between the
two packages.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMBV"
STORE_VERSION = 1


def write_store(path: str | Path, entries: dict[str, np.ndarray]) -> None:
    if not entries:
        raise ValueError("refusing to write empty store")
    dims = {np.asarray(v).shape for v in entries.values()}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise ValueError(f"mixed or invalid vector dimensions: {sorted(dims)}")
    dim = next(iter(dims))[0]
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", STORE_VERSION, dim, len(entries)))
        for key in sorted(entries):
            key_bytes = key.encode("utf-8")
            fh.write(struct.pack("<I", len(key_bytes)))
            fh.write(key_bytes)
            fh.write(np.asarray(entries[key], dtype="<f4").tobytes())
