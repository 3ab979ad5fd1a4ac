import random

import numpy as np
import pytest

from phrasemeter.corpus import data_path, read_phrase_list, read_treebank
from phrasemeter.oracle_lm import MarkovModel, ToyProvider, load_model


@pytest.fixture(scope="session")
def tiny_corpus():
    return read_treebank(data_path("tiny_corpus.trees"))


@pytest.fixture(scope="session")
def tiny_specs():
    return read_phrase_list(data_path("tiny_phrases.tsv"))


@pytest.fixture(scope="session")
def synthetic_corpus():
    return read_treebank(data_path("synthetic_corpus.trees"))


@pytest.fixture(scope="session")
def synthetic_specs():
    return read_phrase_list(data_path("synthetic_phrases.tsv"))


@pytest.fixture(scope="session")
def toy_model():
    return load_model(data_path("toy_model.json"))


@pytest.fixture(scope="session")
def toy_provider(toy_model, synthetic_corpus):
    return ToyProvider.from_paths(data_path("toy_model.json"), synthetic_corpus)


def random_model(rng: random.Random, size: int) -> MarkovModel:
    """A random fully-supported Markov chain over a lowercase vocabulary."""
    vocab = [f"w{i}" for i in range(size)]
    npr = np.random.default_rng(rng.randrange(2 ** 32))
    init = npr.dirichlet(np.ones(size))
    trans = npr.dirichlet(np.ones(size), size=size)
    init = init / init.sum()
    trans = trans / trans.sum(axis=1, keepdims=True)
    return MarkovModel(vocabulary=vocab, initial=init, transitions=trans)
