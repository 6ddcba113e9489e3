"""Weak labeling of unlabeled tweets by kNN majority vote in metric space."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kirelex.corpus import RelationLabel


@dataclass
class LabelerConfig:
    k: int = 5
    distance: str = "cosine"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.distance != "cosine":
            raise ValueError(f"unsupported distance: {self.distance!r}")


@dataclass(frozen=True)
class WeakLabel:
    tweet_id: str
    label: RelationLabel
    confidence: float  # vote fraction in (0, 1]
    neighbor_ids: tuple[str, ...]


LabeledPoint = tuple[str, np.ndarray, RelationLabel]
UnlabeledPoint = tuple[str, np.ndarray]


def _cosine_distances(query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(query)
    if np.any(norms == 0.0):
        raise ValueError("zero-norm representation")
    return 1.0 - np.clip(matrix @ query / norms, -1.0, 1.0)


def knn_label(
    labeled: list[LabeledPoint],
    unlabeled: list[UnlabeledPoint],
    config: LabelerConfig = LabelerConfig(),
) -> list[WeakLabel]:
    """Label each unlabeled point by plurality vote of its k nearest labeled points.

    Neighbors are ordered by (cosine distance, id); equal distances break
    lexicographically by id so the result is a total order. A vote tie is
    broken by the label of the single nearest neighbor among the tied labels.
    """
    if not labeled:
        raise ValueError("labeled set is empty")
    if config.k > len(labeled):
        raise ValueError(f"k={config.k} exceeds labeled set size {len(labeled)}")
    # Sort once so equal-distance ordering is id-lexicographic regardless of
    # input permutation.
    labeled_sorted = sorted(labeled, key=lambda item: item[0])
    ids = [item[0] for item in labeled_sorted]
    labels = [item[2] for item in labeled_sorted]
    matrix = np.stack([np.asarray(item[1], dtype=np.float64) for item in labeled_sorted])

    out: list[WeakLabel] = []
    for query_id, query_vec in unlabeled:
        query = np.asarray(query_vec, dtype=np.float64)
        if query.shape != (matrix.shape[1],):
            raise ValueError(
                f"dimension mismatch for {query_id!r}: {query.shape} vs {matrix.shape[1]}"
            )
        dists = _cosine_distances(query, matrix)
        order = sorted(range(len(ids)), key=lambda i: (dists[i], ids[i]))
        nearest = order[: config.k]
        votes: dict[RelationLabel, int] = {}
        for i in nearest:
            votes[labels[i]] = votes.get(labels[i], 0) + 1
        top = max(votes.values())
        tied = {label for label, count in votes.items() if count == top}
        if len(tied) == 1:
            winner = tied.pop()
        else:
            winner = next(labels[i] for i in nearest if labels[i] in tied)
        out.append(
            WeakLabel(
                tweet_id=query_id,
                label=winner,
                confidence=votes[winner] / config.k,
                neighbor_ids=tuple(ids[i] for i in nearest),
            )
        )
    return out


def write_weak_labels(
    weak_labels: list[WeakLabel], path: str | Path, meta: dict | None = None
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        if meta:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for wl in weak_labels:
            fh.write(
                json.dumps(
                    {
                        "id": wl.tweet_id,
                        "label": wl.label.value,
                        "confidence": wl.confidence,
                        "neighbors": list(wl.neighbor_ids),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
