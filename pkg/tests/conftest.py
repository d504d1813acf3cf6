import functools
import os
import sys
from importlib import resources

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lexparse.annotate import annotate  # noqa: E402
from lexparse.estimation import Lexicon, ParameterTables, train_counts  # noqa: E402
from lexparse.treebank_io import read_trees  # noqa: E402

TOY_PATH = str(resources.files("lexparse").joinpath("data/toy_treebank.mrg"))


@functools.lru_cache(maxsize=None)
def toy_raw():
    with open(TOY_PATH, encoding="utf-8") as f:
        return tuple(read_trees(f.read()))


@functools.lru_cache(maxsize=None)
def toy_trees(model):
    return tuple(annotate(r, model) for r in toy_raw())


@functools.lru_cache(maxsize=None)
def toy_params(model, threshold=5):
    trees = toy_trees(model)
    lex = Lexicon.build(trees, threshold=threshold)
    counts, skipped = train_counts(trees, model, lex)
    assert not skipped
    return ParameterTables(model, counts, lex)


@pytest.fixture(scope="session")
def raw_trees():
    return toy_raw()


@pytest.fixture(scope="session")
def toy_path():
    return TOY_PATH


EXTRA_SENTENCES = ("the man that Mary liked", "Mary liked the dog",
                   "the dog that John saw", "John bought the dog .")


def short_sentences(max_len=6):
    """Toy sentences of at most ``max_len`` tokens plus a few unseen ones."""
    seen = sorted({tuple(w for w, _ in t.tokens()) for t in toy_trees(1)
                   if len(t.tokens()) <= max_len})
    return seen + [tuple(s.split()) for s in EXTRA_SENTENCES]
