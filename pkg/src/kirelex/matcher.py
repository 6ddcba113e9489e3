"""N-gram extraction and lexicon phrase matching by cosine similarity."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kirelex.corpus import TokenSequence
from kirelex.embedding import EmbeddingProvider, cosine_similarity
from kirelex.lexicon import Category, Lexicon


class MatchConflictError(ValueError):
    """Cannabis and depression resolved to conflicting spans."""


@dataclass
class MatcherConfig:
    tau: float = 0.75
    n_min: int = 1
    n_max: int = 3
    substitution: bool = True

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if not 1 <= self.n_min <= self.n_max <= 4:
            raise ValueError("require 1 <= n_min <= n_max <= 4")


@dataclass(frozen=True)
class PhraseMatch:
    ngram: str
    phrase: str        # matched lexicon surface form
    canonical: str     # substitution target
    similarity: float
    span: tuple[int, int]  # token span [start, end)


@dataclass
class PhraseMatchRecord:
    tweet_id: str
    cannabis: PhraseMatch | None
    depression: PhraseMatch | None
    substituted_text: str

    @property
    def fully_matched(self) -> bool:
        return self.cannabis is not None and self.depression is not None


def extract_ngrams(
    tokens: TokenSequence | tuple[str, ...] | list[str], n_min: int, n_max: int
) -> list[tuple[str, tuple[int, int]]]:
    """All contiguous n-grams for n in [n_min, n_max], with token spans.

    Order: left-to-right within each n, increasing n.
    """
    if n_min < 1:
        raise ValueError("n_min must be >= 1")
    toks = tokens.tokens if isinstance(tokens, TokenSequence) else tuple(tokens)
    out: list[tuple[str, tuple[int, int]]] = []
    for n in range(n_min, n_max + 1):
        for start in range(len(toks) - n + 1):
            out.append((" ".join(toks[start : start + n]), (start, start + n)))
    return out


def _similarity(ngram: str, phrase: str, provider: EmbeddingProvider) -> float:
    # Exact surface hits are semantically forced; skip the provider call.
    if ngram == phrase:
        return 1.0
    return cosine_similarity(provider.embed(ngram), provider.embed(phrase))


def _best_match(
    ngrams: list[tuple[str, tuple[int, int]]],
    lexicon: Lexicon,
    category: Category,
    provider: EmbeddingProvider,
    tau: float,
) -> PhraseMatch | None:
    """Argmax over (ngram, phrase) pairs with a total tie-break order.

    Ties: higher similarity, then longer n-gram, then leftmost span, then
    lexicographically smaller lexicon phrase. A matrix product over
    unit-normalized embeddings prunes the candidate pairs; survivors near
    the maximum are re-scored with the scalar cosine kernel so the chosen
    pair and its tie-break match a pair-by-pair evaluation exactly. Exact
    surface hits are forced to 1.0 without a provider call.
    """
    phrases = lexicon.phrases(category)
    if not ngrams or not phrases:
        return None
    ngram_mat = np.stack([provider.embed(text) for text, _ in ngrams])
    phrase_mat = np.stack([provider.embed(p) for p in phrases])
    ngram_mat = ngram_mat / np.linalg.norm(ngram_mat, axis=1, keepdims=True)
    phrase_mat = phrase_mat / np.linalg.norm(phrase_mat, axis=1, keepdims=True)
    sims = np.clip(ngram_mat @ phrase_mat.T, -1.0, 1.0)
    phrase_index = {p: j for j, p in enumerate(phrases)}
    for i, (text, _) in enumerate(ngrams):
        j = phrase_index.get(text)
        if j is not None:
            sims[i, j] = 1.0

    # The matrix product can differ from the scalar kernel in the last few
    # ulps, which matters both at the tau boundary and when two pairs tie;
    # rescreen every pair within a small slack of tau at full precision.
    slack = 1e-9

    best: PhraseMatch | None = None
    best_key: tuple | None = None
    for i, j in np.argwhere(sims >= tau - slack):
        ngram, span = ngrams[i]
        phrase = phrases[j]
        if ngram == phrase:
            sim = 1.0
        else:
            sim = cosine_similarity(provider.embed(ngram), provider.embed(phrase))
        if sim < tau:
            continue
        key = (-sim, -(span[1] - span[0]), span[0], phrase)
        if best_key is None or key < best_key:
            entry = lexicon.lookup(phrase)
            assert entry is not None
            best = PhraseMatch(
                ngram=ngram,
                phrase=phrase,
                canonical=entry.canonical,
                similarity=sim,
                span=span,
            )
            best_key = key
    return best


def substitute(tweet: TokenSequence, record: PhraseMatchRecord) -> str:
    """Rebuild tweet text with matched spans replaced by canonical phrases.

    Replacement runs right-to-left so earlier spans stay valid. Overlapping
    spans indicate lexicon pollution and raise.
    """
    matches = [m for m in (record.cannabis, record.depression) if m is not None]
    for m in matches:
        if not (0 <= m.span[0] < m.span[1] <= len(tweet.tokens)):
            raise ValueError(f"span {m.span} out of bounds for tweet {tweet.source_id!r}")
    if len(matches) == 2:
        a, b = sorted(matches, key=lambda m: m.span)
        if a.span[1] > b.span[0]:
            raise MatchConflictError(
                f"overlapping match spans {a.span} and {b.span} in tweet {tweet.source_id!r}"
            )
    tokens = list(tweet.tokens)
    for m in sorted(matches, key=lambda m: m.span, reverse=True):
        tokens[m.span[0] : m.span[1]] = m.canonical.split()
    return " ".join(tokens)


def match_phrases(
    tweet: TokenSequence,
    lexicon: Lexicon,
    provider: EmbeddingProvider,
    config: MatcherConfig,
) -> PhraseMatchRecord:
    """Select the best cannabis and depression phrase match for one tweet.

    Each category is matched independently; a category with no pair at or
    above tau is left absent. Identical winning spans for both categories
    raise MatchConflictError.
    """
    ngrams = extract_ngrams(tweet, config.n_min, config.n_max)
    cannabis = _best_match(ngrams, lexicon, Category.CANNABIS, provider, config.tau)
    depression = _best_match(ngrams, lexicon, Category.DEPRESSION, provider, config.tau)
    if cannabis is not None and depression is not None and cannabis.span == depression.span:
        raise MatchConflictError(
            f"cannabis and depression both matched span {cannabis.span} "
            f"in tweet {tweet.source_id!r}"
        )
    record = PhraseMatchRecord(
        tweet_id=tweet.source_id,
        cannabis=cannabis,
        depression=depression,
        substituted_text=tweet.text(),
    )
    if config.substitution:
        record.substituted_text = substitute(tweet, record)
    return record


def _match_to_json(match: PhraseMatch | None) -> dict | None:
    if match is None:
        return None
    return {
        "ngram": match.ngram,
        "phrase": match.phrase,
        "sim": match.similarity,
        "span": [match.span[0], match.span[1]],
    }


def record_to_json(record: PhraseMatchRecord) -> dict:
    return {
        "id": record.tweet_id,
        "cannabis": _match_to_json(record.cannabis),
        "depression": _match_to_json(record.depression),
        "substituted": record.substituted_text,
    }


def write_match_records(
    records: list[PhraseMatchRecord], path: str | Path, meta: dict | None = None
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        if meta:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record_to_json(record), sort_keys=True) + "\n")
