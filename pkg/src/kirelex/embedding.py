"""Embedding providers, the cosine kernel, and the binary vector store."""
from __future__ import annotations

import hashlib
import struct
import threading
import time
from pathlib import Path

import numpy as np
import requests

MAGIC = b"EMBV"
STORE_VERSION = 1


class StoreFormatError(ValueError):
    pass


class EmbeddingError(RuntimeError):
    pass


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two non-zero vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


class EmbeddingProvider:
    """Base class: memoized text -> vector lookup with a fixed dimension.

    Subclasses implement _compute(text). The memo cache makes repeated
    queries bit-identical and is safe for concurrent embed() calls.
    """

    kind = "abstract"

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        with self._lock:
            cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = np.asarray(self._compute(text), dtype=np.float64)
        if vec.shape != (self.dim,):
            raise EmbeddingError(
                f"provider returned dim {vec.shape} for declared dim {self.dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError(f"non-finite embedding for {text!r}")
        vec.setflags(write=False)
        with self._lock:
            self._cache.setdefault(text, vec)
            return self._cache[text]

    def _compute(self, text: str) -> np.ndarray:
        raise NotImplementedError


class HashProvider(EmbeddingProvider):
    """Deterministic ML-free embedder for tests and synthetic runs.

    Each token gets a pseudo-random Gaussian vector seeded from its hash;
    the text vector is the unit-normalized mean of its token vectors, so
    texts sharing tokens land closer together.
    """

    kind = "hash"

    def __init__(self, dim: int = 64, seed: int = 0):
        super().__init__(dim)
        self.seed = seed
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                f"{self.seed}:{token}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dim)
            self._token_cache[token] = vec
        return vec

    def _compute(self, text: str) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            raise ValueError("cannot embed whitespace-only text")
        with self._lock:
            mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            raise EmbeddingError(f"zero-norm embedding for {text!r}")
        return mean / norm


class StoreProvider(EmbeddingProvider):
    """Serves precomputed vectors from an on-disk store; misses are errors."""

    kind = "store"

    def __init__(self, store: "EmbeddingStore"):
        super().__init__(store.dim)
        self.store = store

    def _compute(self, text: str) -> np.ndarray:
        vec = self.store.vectors.get(text)
        if vec is None:
            raise KeyError(f"embedding store has no key {text!r}")
        return vec


class HttpProvider(EmbeddingProvider):
    """Client for the POST /embed protocol with retry + exponential backoff."""

    kind = "http"

    def __init__(
        self,
        url: str,
        dim: int,
        retries: int = 3,
        backoff: float = 0.25,
        timeout: float = 30.0,
    ):
        super().__init__(dim)
        self.url = url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def _compute(self, text: str) -> np.ndarray:
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = requests.post(
                    f"{self.url}/embed", json={"texts": [text]}, timeout=self.timeout
                )
                if resp.status_code != 200:
                    raise EmbeddingError(
                        f"embedding service returned {resp.status_code}"
                    )
                body = resp.json()
                if body["dim"] != self.dim:
                    raise EmbeddingError(
                        f"service dim {body['dim']} != provider dim {self.dim}"
                    )
                return np.asarray(body["vectors"][0], dtype=np.float64)
            except (requests.RequestException, EmbeddingError) as exc:
                last_error = exc
                if attempt < self.retries - 1:
                    time.sleep(self.backoff * (2**attempt))
        raise EmbeddingError(f"embedding request failed after {self.retries} attempts: {last_error}")


class EmbeddingStore:
    """In-memory view of an EMBV store file (vectors promoted to float64)."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray], path: Path | None = None):
        self.dim = dim
        self.vectors = vectors
        self.path = path

    def __len__(self) -> int:
        return len(self.vectors)


def write_store(path: str | Path, entries: dict[str, np.ndarray]) -> None:
    """Write entries in the EMBV binary format (little-endian, f32 payload).

    Layout: "EMBV", u32 version=1, u32 dim, u64 count, then per key:
    u32 key byte-length, key UTF-8 bytes, dim f32 values. Keys sorted.
    """
    if not entries:
        raise ValueError("refusing to write empty store")
    dims = {np.asarray(v).shape for v in entries.values()}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise ValueError(f"mixed or invalid vector dimensions: {sorted(dims)}")
    dim = next(iter(dims))[0]
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", STORE_VERSION, dim, len(entries)))
        for key in sorted(entries):
            key_bytes = key.encode("utf-8")
            fh.write(struct.pack("<I", len(key_bytes)))
            fh.write(key_bytes)
            fh.write(np.asarray(entries[key], dtype="<f4").tobytes())


def read_store(path: str | Path) -> EmbeddingStore:
    """Read an EMBV file back; corrupt magic/version/truncation are errors."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 20 or data[:4] != MAGIC:
        raise StoreFormatError(f"not an EMBV store: {path}")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != STORE_VERSION:
        raise StoreFormatError(f"unsupported store version {version}")
    vectors: dict[str, np.ndarray] = {}
    offset = 20
    for _ in range(count):
        if offset + 4 > len(data):
            raise StoreFormatError(f"truncated store: {path}")
        (key_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        end = offset + key_len + 4 * dim
        if end > len(data):
            raise StoreFormatError(f"truncated store: {path}")
        key = data[offset : offset + key_len].decode("utf-8")
        offset += key_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        vec.setflags(write=False)
        offset += 4 * dim
        if key in vectors:
            raise StoreFormatError(f"duplicate key in store: {key!r}")
        vectors[key] = vec
    if offset != len(data):
        raise StoreFormatError(f"trailing bytes in store: {path}")
    return EmbeddingStore(dim=dim, vectors=vectors, path=path)
