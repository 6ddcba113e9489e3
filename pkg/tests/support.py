"""Importable helpers shared across test modules: stub providers and
vector/lexicon constructors. Fixtures live in conftest.py."""
from __future__ import annotations

import numpy as np

from kirelex.embedding import EmbeddingProvider
from kirelex.lexicon import Category, LexiconEntry, build_lexicon


class ScriptedProvider(EmbeddingProvider):
    """Provider with preset vectors; unknown texts get fresh orthogonal axes.

    Preset vectors let a test pin exact cosine similarities between chosen
    (text, text) pairs; every other text is orthogonal to everything else,
    so unscripted pairs sit at similarity 0.
    """

    kind = "scripted"

    def __init__(self, presets: dict[str, np.ndarray], dim: int = 256):
        super().__init__(dim)
        self._presets = {k: np.asarray(v, dtype=np.float64) for k, v in presets.items()}
        self._next_axis = dim - 1

    def _compute(self, text: str) -> np.ndarray:
        vec = self._presets.get(text)
        if vec is None:
            if self._next_axis < 0:
                raise RuntimeError("scripted provider ran out of axes")
            vec = np.zeros(self.dim)
            vec[self._next_axis] = 1.0
            self._next_axis -= 1
            self._presets[text] = vec
        return vec


def axis_vector(dim: int, axis: int, value: float = 1.0) -> np.ndarray:
    vec = np.zeros(dim)
    vec[axis] = value
    return vec


def leaning_vector(dim: int, toward_axis: int, sim: float, own_axis: int) -> np.ndarray:
    """Unit vector with cosine exactly `sim` against basis axis `toward_axis`."""
    vec = np.zeros(dim)
    vec[toward_axis] = sim
    vec[own_axis] = np.sqrt(1.0 - sim * sim)
    return vec


def make_lexicon(cannabis: dict[str, str], depression: dict[str, str]):
    """Build a lexicon from {surface: canonical} maps, one per category."""
    entries = [
        LexiconEntry(phrase=p, canonical=c, category=Category.CANNABIS)
        for p, c in cannabis.items()
    ] + [
        LexiconEntry(phrase=p, canonical=c, category=Category.DEPRESSION)
        for p, c in depression.items()
    ]
    return build_lexicon(entries)
