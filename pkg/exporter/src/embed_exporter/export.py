"""Batch export: text file in, EMBV store out."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from embed_exporter.model import POOLINGS, EmbeddingModel
from embed_exporter.store import write_store


@dataclass
class ExportJob:
    input_path: str
    model_id: str
    output_path: str
    pooling: str = "mean"
    batch_size: int = 32

    def __post_init__(self):
        if self.pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def read_texts(path: str | Path) -> list[str]:
    """Unique non-empty lines of a UTF-8 text file, first-seen order."""
    seen: dict[str, None] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            text = line.rstrip("\n")
            if text.strip():
                seen.setdefault(text, None)
    if not seen:
        raise ValueError(f"no texts found in {path}")
    return list(seen)


def export(job: ExportJob, model: EmbeddingModel | None = None) -> int:
    """Embed every unique input line and write the store; returns the count."""
    texts = read_texts(job.input_path)
    if model is None:
        model = EmbeddingModel(job.model_id, pooling=job.pooling)
    vectors = model.embed(texts, batch_size=job.batch_size)
    write_store(job.output_path, dict(zip(texts, vectors)))
    return len(texts)
