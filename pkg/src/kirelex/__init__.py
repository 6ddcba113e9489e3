"""Knowledge-infused cannabis/depression relation extraction toolkit."""

__version__ = "0.1.0"

from kirelex.corpus import RelationLabel, Tweet, TokenSequence, load_tweets, normalize
from kirelex.embedding import cosine_similarity
from kirelex.lexicon import Category, Lexicon, load_lexicon

__all__ = [
    "Category",
    "Lexicon",
    "RelationLabel",
    "TokenSequence",
    "Tweet",
    "cosine_similarity",
    "load_lexicon",
    "load_tweets",
    "normalize",
    "__version__",
]
