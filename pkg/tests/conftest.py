"""Shared fixtures for the test suite; helpers live in support.py."""
import pytest

from kirelex.embedding import HashProvider

from support import make_lexicon


@pytest.fixture
def hash_provider() -> HashProvider:
    return HashProvider(dim=64, seed=0)


@pytest.fixture
def tiny_lexicon():
    return make_lexicon(
        cannabis={"weed": "cannabis", "blunt": "blunt", "smoke pot": "smoke pot"},
        depression={"depressed": "depression", "hopeless": "hopelessness"},
    )
