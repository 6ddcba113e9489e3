import json
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirelex.corpus import (
    NormalizeConfig,
    RelationLabel,
    Tweet,
    TweetCollection,
    load_tweets,
    normalize,
    save_tweets,
    tokenize,
)


class TestRelationLabel:
    def test_parse_case_insensitive(self):
        assert RelationLabel.parse("Reason") is RelationLabel.REASON
        assert RelationLabel.parse("  EFFECT ") is RelationLabel.EFFECT
        assert RelationLabel.parse("addiction") is RelationLabel.ADDICTION

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError, match="unknown relation label"):
            RelationLabel.parse("cause")

    def test_exactly_three_values(self):
        assert {l.value for l in RelationLabel} == {"reason", "effect", "addiction"}


class TestNormalize:
    def test_stopword_stripping_sentence(self):
        # lowercase, punctuation removal, and stopword drop, derived by hand
        # against the shipped default stopword list
        out = normalize("The lack of sleep in my life is misery as hell.")
        assert out == ["lack", "sleep", "life", "misery", "hell"]

    def test_empty_input(self):
        assert normalize("") == []

    def test_url_mention_hashtag(self):
        out = normalize("@buddy check www.example.com/x #WEED now!!")
        assert out == ["check", "weed"]

    def test_https_url_stripped(self):
        assert normalize("see https://t.co/abc123 weed") == ["see", "weed"]

    def test_hashtag_word_kept(self):
        assert normalize("#CBD oil helps") == ["cbd", "oil", "helps"]

    def test_stopwords_optional(self):
        cfg = NormalizeConfig(remove_stopwords=False)
        assert normalize("the weed is here", cfg) == ["the", "weed", "is", "here"]

    def test_unicode_composed_characters(self):
        # NFC normalization before lowercasing: decomposed e + combining acute
        assert normalize("café weed") == normalize("café weed")

    @given(st.text(max_size=80))
    @settings(max_examples=200, deadline=None)
    def test_tokens_are_clean(self, raw):
        for token in normalize(raw):
            assert token
            assert token == token.lower()
            assert not any(c.isspace() for c in token)
            assert not any(c in string.punctuation for c in token)

    @given(st.text(max_size=80))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_on_own_output(self, raw):
        once = normalize(raw)
        assert normalize(" ".join(once)) == once


class TestLoadTweets:
    def _write(self, path, lines):
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def test_loads_valid_records(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        self._write(
            path,
            [
                json.dumps({"id": "t1", "text": "weed one", "label": "reason"}),
                json.dumps({"id": "t2", "text": "weed two"}),
                json.dumps({"id": "t3", "text": "weed three", "label": "Effect"}),
            ],
        )
        collection = load_tweets(path)
        assert len(collection) == 3
        assert collection.skipped == 0
        assert collection.tweets[2].label is RelationLabel.EFFECT

    def test_skips_malformed(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        self._write(
            path,
            [
                json.dumps({"id": "t1", "text": "ok"}),
                json.dumps({"id": "t2", "text": "   "}),  # empty after strip
                "{not json",
                json.dumps({"id": "t3", "text": "ok", "label": "bogus"}),
                json.dumps({"text": "no id"}),
            ],
        )
        collection = load_tweets(path)
        assert len(collection) == 1
        assert collection.skipped == 4

    def test_duplicate_id_errors(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        self._write(
            path,
            [
                json.dumps({"id": "t1", "text": "a"}),
                json.dumps({"id": "t1", "text": "b"}),
            ],
        )
        with pytest.raises(ValueError, match="duplicate tweet id"):
            load_tweets(path)

    def test_zero_valid_records_errors(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        self._write(path, ["{broken"])
        with pytest.raises(ValueError, match="no valid tweet records"):
            load_tweets(path)

    def test_unknown_format_errors(self, tmp_path):
        with pytest.raises(ValueError, match="unsupported tweet format"):
            load_tweets(tmp_path / "x.csv", format="csv")

    def test_round_trip(self, tmp_path):
        original = TweetCollection(
            tweets=[
                Tweet("t1", "weed and rain", RelationLabel.REASON),
                Tweet("t2", "just weather"),
            ]
        )
        path = tmp_path / "out.jsonl"
        save_tweets(original, path)
        reloaded = load_tweets(path)
        assert reloaded.tweets == original.tweets


class TestCollection:
    def test_labeled_unlabeled_split(self):
        c = TweetCollection(
            tweets=[
                Tweet("a", "x", RelationLabel.REASON),
                Tweet("b", "y"),
                Tweet("c", "z", RelationLabel.ADDICTION),
            ]
        )
        assert [t.id for t in c.labeled()] == ["a", "c"]
        assert [t.id for t in c.unlabeled()] == ["b"]

    def test_tokenize_carries_source_id(self):
        seq = tokenize(Tweet("t9", "Weed, weather."))
        assert seq.source_id == "t9"
        assert seq.tokens == ("weed", "weather")
        assert seq.text() == "weed weather"
