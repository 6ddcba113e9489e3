"""Tweet ingestion, normalization into token sequences, and splits."""
from __future__ import annotations

import json
import re
import string
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from kirelex.stopwords import DEFAULT_STOPWORDS

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")


class RelationLabel(Enum):
    """The three cannabis-depression relation classes."""

    REASON = "reason"
    EFFECT = "effect"
    ADDICTION = "addiction"

    @classmethod
    def parse(cls, text: str) -> "RelationLabel":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown relation label: {text!r}") from None


@dataclass(frozen=True)
class Tweet:
    id: str
    raw_text: str
    label: RelationLabel | None = None


@dataclass(frozen=True)
class TokenSequence:
    """Normalized, lowercased tokens of one tweet."""

    tokens: tuple[str, ...]
    source_id: str = ""

    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class NormalizeConfig:
    remove_stopwords: bool = True
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    punctuation: str = string.punctuation


DEFAULT_NORMALIZE = NormalizeConfig()


def normalize(raw_text: str, config: NormalizeConfig = DEFAULT_NORMALIZE) -> list[str]:
    """Normalize raw tweet text into a list of clean lowercase tokens.

    Rule order: NFC -> lowercase -> strip URLs -> strip @-mentions ->
    drop '#' (keep the hashtag word) -> punctuation to spaces ->
    whitespace split -> optional stopword removal.
    """
    text = unicodedata.normalize("NFC", raw_text).lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = text.replace("#", " ")
    text = text.translate(str.maketrans({c: " " for c in config.punctuation}))
    tokens = text.split()
    if config.remove_stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    return tokens


def tokenize(tweet: Tweet, config: NormalizeConfig = DEFAULT_NORMALIZE) -> TokenSequence:
    return TokenSequence(tuple(normalize(tweet.raw_text, config)), source_id=tweet.id)


@dataclass
class TweetCollection:
    tweets: list[Tweet] = field(default_factory=list)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self):
        return iter(self.tweets)

    def labeled(self) -> list[Tweet]:
        return [t for t in self.tweets if t.label is not None]

    def unlabeled(self) -> list[Tweet]:
        return [t for t in self.tweets if t.label is None]


def _parse_record(obj: object) -> Tweet | None:
    if not isinstance(obj, dict):
        return None
    tweet_id = obj.get("id")
    text = obj.get("text")
    if not isinstance(tweet_id, str) or not tweet_id:
        return None
    if not isinstance(text, str) or not text.strip():
        return None
    label = None
    if obj.get("label") is not None:
        try:
            label = RelationLabel.parse(obj["label"])
        except (ValueError, AttributeError):
            return None
    return Tweet(id=tweet_id, raw_text=text, label=label)


def load_tweets(path: str | Path, format: str = "jsonl") -> TweetCollection:
    """Load tweets from a JSON-lines file, skipping malformed records.

    Raises on an unreadable file, zero valid records, or duplicate ids.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported tweet format: {format!r}")
    path = Path(path)
    tweets: list[Tweet] = []
    seen: set[str] = set()
    skipped = 0
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                skipped += 1
                continue
            tweet = _parse_record(obj)
            if tweet is None:
                skipped += 1
                continue
            if tweet.id in seen:
                raise ValueError(f"duplicate tweet id: {tweet.id!r}")
            seen.add(tweet.id)
            tweets.append(tweet)
    if not tweets:
        raise ValueError(f"no valid tweet records in {path}")
    return TweetCollection(tweets=tweets, skipped=skipped)


def save_tweets(collection: TweetCollection, path: str | Path) -> None:
    """Write a collection back as JSON-lines (lowercase labels)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for tweet in collection:
            obj: dict[str, object] = {"id": tweet.id, "text": tweet.raw_text}
            if tweet.label is not None:
                obj["label"] = tweet.label.value
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
