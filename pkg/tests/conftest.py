import numpy as np
import pytest

from rulesieve import Corpus, Instance, Rule, RuleSet


def make_instances(texts, golds=None, start_id=0):
    golds = golds if golds is not None else [None] * len(texts)
    return [Instance(id=start_id + i, text=t, gold=g) for i, (t, g) in enumerate(zip(texts, golds))]


def make_corpus(labeled=(), unlabeled=(), validation=(), test=()):
    """Build a corpus from (texts, golds) pairs; unlabeled takes bare texts."""
    next_id = 0
    parts = {}
    for name, part in (("labeled", labeled), ("validation", validation), ("test", test)):
        texts, golds = part if part else ((), ())
        parts[name] = tuple(make_instances(texts, golds, start_id=next_id))
        next_id += len(texts)
    parts["unlabeled"] = tuple(make_instances(list(unlabeled), start_id=next_id))
    return Corpus(**parts)


def rule(rid, pattern, label, origin="external"):
    if isinstance(pattern, str):
        pattern = (pattern,)
    return Rule(id=rid, pattern=tuple(pattern), label=label, origin=origin)


def ruleset(*specs):
    return RuleSet(tuple(rule(*s) for s in specs))


def random_firing_matrix(rng, n_rows, n_cols, num_classes):
    """Arbitrary weak-label matrix; columns need not be single-label."""
    return rng.integers(0, num_classes + 1, size=(n_rows, n_cols)).astype(np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
