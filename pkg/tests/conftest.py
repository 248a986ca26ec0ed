import pytest

from ghosttype.corpus import filter_corpus, load_desk_corpus, train_eval_split
from ghosttype.lm import build_lm


@pytest.fixture(scope="session")
def desk_corpus():
    return load_desk_corpus()


@pytest.fixture(scope="session")
def desk_split(desk_corpus):
    return train_eval_split(desk_corpus, eval_size=50, seed=0)


@pytest.fixture(scope="session")
def desk_model(desk_split):
    train, _ = desk_split
    return build_lm(train)


@pytest.fixture(scope="session")
def tiny_model():
    """Vocabulary {call:2, me:1, later:1} with bigrams after `call`."""
    return build_lm(filter_corpus(["call me", "call later"]))


@pytest.fixture(scope="session")
def five_word_corpus():
    """Five one-word sentences with distinct first letters and skewed
    frequencies; the context MDP over these is exactly the word trie."""
    lines = (
        ["call"] * 5
        + ["sorry"] * 4
        + ["later"] * 3
        + ["thanks"] * 2
        + ["great"] * 1
    )
    return filter_corpus(lines)
