import pytest

from destrank.corpus import load_corpus, load_dataset
from fixture_paths import FIXTURES


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus(FIXTURES / "corpus.jsonl")


@pytest.fixture(scope="session")
def fixture_dataset(fixture_corpus):
    return load_dataset(FIXTURES / "queries.jsonl", FIXTURES / "qrels.jsonl", fixture_corpus)
