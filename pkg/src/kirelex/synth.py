"""Synthetic labeled corpus generator for benchmarks and end-to-end tests.

Each tweet plants one cannabis phrase and one depression phrase from the
shipped sample lexicon among filler tokens. Cannabis surfaces are drawn
from a single pool shared by every class, so their exact-match structure
is pure nuisance for a raw nearest-neighbor baseline. Depression surfaces
are class-specific and vary within lexicon concepts, so canonical
substitution collapses them onto a compact class-predictive vocabulary; a
trained metric can amplify that signal while suppressing the cannabis
part and the per-tweet filler topic.

Fillers are drawn from per-tweet topic pools chosen independently of the
class; topics create nuisance structure in whole-tweet embeddings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kirelex.corpus import RelationLabel, Tweet, TweetCollection

CLASSES = [RelationLabel.REASON, RelationLabel.EFFECT, RelationLabel.ADDICTION]

# Cannabis surfaces are shared by every class (as in the real task, the
# drug mention itself does not determine the relation); their exact-match
# structure misleads a raw nearest-neighbor baseline.
SHARED_CANNABIS = [
    "weed", "blunt", "joint", "spliff", "bong", "marijuana", "smoke pot",
    "ganja", "kush", "reefer", "hash", "edibles", "dab", "sativa", "indica",
    "bud",
]

# Depression surfaces are class-specific and grouped by lexicon concept;
# canonical substitution collapses each group onto a small canonical
# vocabulary, which is the signal knowledge matching contributes.
CLASS_DEPRESSION = [
    [
        "depressed", "depression", "emotionally depressed", "low mood",
        "anxiety", "anxious", "dread", "hopeless", "hopelessness",
    ],
    [
        "worthless", "worthlessness", "self loathing", "fatigue",
        "exhausted", "lonely", "loneliness", "miserable", "misery",
    ],
    [
        "numb", "hollow", "grief", "heartbroken", "despair", "despondent",
        "crying", "tearful", "melancholy",
    ],
]

FILLER_TOPICS = [
    ["morning", "coffee", "breakfast", "commute", "office", "meeting", "deadline", "email"],
    ["tonight", "music", "concert", "playlist", "dancing", "lights", "crowd", "stage"],
    ["weekend", "hiking", "trail", "mountain", "river", "camping", "sunrise", "tent"],
    ["city", "subway", "traffic", "noise", "streets", "neon", "strangers", "rush"],
    ["kitchen", "cooking", "dinner", "recipe", "garlic", "onions", "pasta", "oven"],
    ["gaming", "console", "stream", "ranked", "lobby", "headset", "pixels", "keyboard"],
]


@dataclass
class SynthConfig:
    n: int = 300
    seed: int = 0
    min_fillers: int = 3
    max_fillers: int = 5


def _filler_run(rng: np.random.Generator, topic: list[str], config: SynthConfig) -> list[str]:
    count = int(rng.integers(config.min_fillers, config.max_fillers + 1))
    return [topic[i] for i in rng.integers(0, len(topic), size=count)]


def generate_synthetic_corpus(config: SynthConfig = SynthConfig()) -> TweetCollection:
    """Generate a fully labeled synthetic corpus, balanced over the 3 classes."""
    rng = np.random.default_rng(config.seed)
    tweets: list[Tweet] = []
    for i in range(config.n):
        class_index = i % 3
        label = CLASSES[class_index]
        topic = FILLER_TOPICS[int(rng.integers(0, len(FILLER_TOPICS)))]
        cannabis = SHARED_CANNABIS[int(rng.integers(0, len(SHARED_CANNABIS)))]
        pool_d = CLASS_DEPRESSION[class_index]
        depression = pool_d[int(rng.integers(0, len(pool_d)))]
        first, second = (cannabis, depression) if rng.random() < 0.5 else (depression, cannabis)
        tokens = (
            _filler_run(rng, topic, config)
            + first.split()
            + _filler_run(rng, topic, config)
            + second.split()
            + _filler_run(rng, topic, config)
        )
        tweets.append(Tweet(id=f"synth-{i:04d}", raw_text=" ".join(tokens), label=label))
    return TweetCollection(tweets=tweets)
