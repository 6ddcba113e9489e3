"""Cannabis/depression phrase lexicon loading and indexing."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from kirelex.corpus import NormalizeConfig, normalize

# Lexicon phrases keep every word; stopword removal is a tweet-side concern.
_LEXICON_NORMALIZE = NormalizeConfig(remove_stopwords=False)

MAX_PHRASE_TOKENS = 4


class Category(Enum):
    CANNABIS = "cannabis"
    DEPRESSION = "depression"

    @classmethod
    def parse(cls, text: str) -> "Category":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown lexicon category: {text!r}") from None


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class LexiconEntry:
    phrase: str
    canonical: str
    category: Category
    source: str = ""


@dataclass
class Lexicon:
    """Immutable-after-load phrase index, keyed by surface form."""

    by_phrase: dict[str, LexiconEntry]
    by_category: dict[Category, list[LexiconEntry]]

    def lookup(self, phrase: str) -> LexiconEntry | None:
        return self.by_phrase.get(phrase)

    def phrases(self, category: Category) -> list[str]:
        """Surface phrases of one category, lexicographically sorted."""
        return sorted(e.phrase for e in self.by_category.get(category, []))

    def entries(self) -> list[LexiconEntry]:
        return [self.by_phrase[p] for p in sorted(self.by_phrase)]


def build_lexicon(entries: list[LexiconEntry]) -> Lexicon:
    """Index entries; duplicate surface forms are a hard error."""
    by_phrase: dict[str, LexiconEntry] = {}
    by_category: dict[Category, list[LexiconEntry]] = {c: [] for c in Category}
    for entry in entries:
        if not entry.phrase or not entry.canonical:
            raise LexiconError("empty phrase or canonical form")
        if entry.phrase in by_phrase:
            raise LexiconError(f"duplicate lexicon phrase: {entry.phrase!r}")
        by_phrase[entry.phrase] = entry
        by_category[entry.category].append(entry)
    return Lexicon(by_phrase=by_phrase, by_category=by_category)


def _normalize_phrase(text: str) -> str:
    return " ".join(normalize(text, _LEXICON_NORMALIZE))


def load_lexicon(path: str | Path) -> Lexicon:
    """Load and validate a JSON-lines lexicon file.

    Both categories must end up non-empty; surface forms must be unique.
    """
    path = Path(path)
    entries: list[LexiconEntry] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LexiconError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict) or not obj.get("phrase"):
                raise LexiconError(f"{path}:{lineno}: missing phrase")
            phrase = _normalize_phrase(str(obj["phrase"]))
            canonical = _normalize_phrase(str(obj.get("canonical") or obj["phrase"]))
            if not phrase:
                raise LexiconError(f"{path}:{lineno}: phrase normalizes to empty")
            if len(phrase.split()) > MAX_PHRASE_TOKENS:
                raise LexiconError(
                    f"{path}:{lineno}: phrase longer than {MAX_PHRASE_TOKENS} tokens"
                )
            category = Category.parse(str(obj.get("category", "")))
            entries.append(
                LexiconEntry(
                    phrase=phrase,
                    canonical=canonical,
                    category=category,
                    source=str(obj.get("source", "")),
                )
            )
    if not entries:
        raise LexiconError(f"empty lexicon file: {path}")
    lexicon = build_lexicon(entries)
    for category in Category:
        if not lexicon.by_category[category]:
            raise LexiconError(f"category {category.value} empty")
    return lexicon
