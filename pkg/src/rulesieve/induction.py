"""Candidate rule generation from a small labeled set.

Two inducers are provided: :class:`StumpRuleInducer` emits one rule per
sufficiently supported n-gram (label = majority gold class among the
instances it fires on), and :class:`ClassifierWeightRuleInducer` trains a
one-vs-rest logistic regression on bag-of-words features and emits one rule
per top positive (feature, class) weight.
"""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Corpus, Instance, Rule, RuleSet, tokenize, _matches
from .errors import DataError

TokenSeq = tuple[str, ...]


def _as_token_lists(X: Sequence) -> list[TokenSeq]:
    docs = []
    for item in X:
        if isinstance(item, str):
            docs.append(tokenize(item))
        elif isinstance(item, Instance):
            docs.append(item.tokens)
        else:
            docs.append(tuple(item))
    return docs


def _check_labels(y, n_docs: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or len(y) != n_docs:
        raise DataError("y must be a 1-d label array aligned with X")
    if n_docs == 0:
        raise DataError("cannot induce rules from an empty labeled set")
    if y.min() < 1:
        raise DataError("class labels must be integers in 1..K (0 is reserved for abstain)")
    return y


def _apply_rules(rules: RuleSet, docs: list[TokenSeq]) -> np.ndarray:
    out = np.zeros((len(docs), len(rules)), dtype=np.int64)
    for j, rule in enumerate(rules):
        hits = [_matches(tokens, rule.pattern) for tokens in docs]
        out[np.asarray(hits, dtype=bool), j] = rule.label
    return out


# ---------------------------------------------------------------------------
# bag-of-words featurization
# ---------------------------------------------------------------------------


def featurize(X: Sequence, vocab: Sequence[str] | None = None) -> tuple[np.ndarray, list[str]]:
    """Binary unigram-presence features.

    When ``vocab`` is None it is built from ``X`` in first-occurrence order;
    tokens outside the vocabulary are ignored (closed vocabulary).
    """
    docs = _as_token_lists(X)
    if vocab is None:
        vocab = []
        seen = set()
        for tokens in docs:
            for token in tokens:
                if token not in seen:
                    seen.add(token)
                    vocab.append(token)
    else:
        vocab = list(vocab)
    index = {token: i for i, token in enumerate(vocab)}
    features = np.zeros((len(docs), len(vocab)), dtype=np.float64)
    for row, tokens in enumerate(docs):
        for token in tokens:
            col = index.get(token)
            if col is not None:
                features[row, col] = 1.0
    return features, vocab


# ---------------------------------------------------------------------------
# one-vs-rest logistic regression (full-batch gradient descent)
# ---------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def ovr_loss(W: np.ndarray, X: np.ndarray, targets: np.ndarray, l2: float) -> float:
    """Summed per-class mean logistic loss plus an L2 penalty on the weights.

    ``targets`` is the n x K one-vs-rest 0/1 matrix.
    """
    logits = X @ W.T
    # log(1 + exp(z)) - y*z, computed stably from |z|.
    per_elem = np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    return float(per_elem.mean(axis=0).sum() + 0.5 * l2 * (W**2).sum())


def ovr_gradient(W: np.ndarray, X: np.ndarray, targets: np.ndarray, l2: float) -> np.ndarray:
    """Analytic gradient of :func:`ovr_loss` with respect to ``W``."""
    probs = _sigmoid(X @ W.T)
    return (probs - targets).T @ X / X.shape[0] + l2 * W


class OneVsRestLogisticRegression(BaseEstimator):
    """Multiclass logistic regression, one independent binary problem per class.

    Weights start at zero and are updated by full-batch gradient descent, so
    training is deterministic; with a sufficiently small learning rate the
    recorded ``losses_`` are non-increasing.
    """

    def __init__(self, l2: float = 1e-3, epochs: int = 500, learning_rate: float = 0.5):
        self.l2 = l2
        self.epochs = epochs
        self.learning_rate = learning_rate

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = _check_labels(y, X.shape[0])
        if self.l2 < 0:
            raise DataError("l2 must be nonnegative")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise DataError("epochs must be >= 0 and learning_rate positive")
        if len(np.unique(y)) < 2:
            raise DataError("training labels contain a single class")
        num_classes = int(y.max())
        targets = (y[:, None] == np.arange(1, num_classes + 1)[None, :]).astype(np.float64)
        W = np.zeros((num_classes, X.shape[1]), dtype=np.float64)
        losses = [ovr_loss(W, X, targets, self.l2)]
        for _ in range(self.epochs):
            W -= self.learning_rate * ovr_gradient(W, X, targets, self.l2)
            losses.append(ovr_loss(W, X, targets, self.l2))
        self.classes_ = np.arange(1, num_classes + 1)
        self.coef_ = W
        self.losses_ = losses
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return np.asarray(X, dtype=np.float64) @ self.coef_.T

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X).argmax(axis=1) + 1


def train_linear_classifier(
    X, y, l2: float = 1e-3, epochs: int = 500, learning_rate: float = 0.5
) -> np.ndarray:
    """Train the one-vs-rest model and return its K x n_features weight matrix."""
    model = OneVsRestLogisticRegression(l2=l2, epochs=epochs, learning_rate=learning_rate)
    return model.fit(X, y).coef_


# ---------------------------------------------------------------------------
# inducers
# ---------------------------------------------------------------------------


class _RuleApplierMixin:
    """Shared transform: weak-label matrix of the induced rules over new texts."""

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "rules_")
        return _apply_rules(self.rules_, _as_token_lists(X))


class StumpRuleInducer(BaseEstimator, _RuleApplierMixin):
    """Emit one depth-1 rule per supported n-gram.

    Every n-gram (up to ``ngram_max`` tokens) firing on at least
    ``min_support`` labeled instances becomes a candidate labeled with the
    majority gold class among its firings (ties go to the lowest class).
    Candidates are ranked by labeled precision, then labeled support, and
    truncated to ``max_candidates`` (None keeps everything).

    Attributes after fit: ``rules_`` (the candidate RuleSet),
    ``rule_precisions_`` and ``rule_supports_`` aligned with it, and
    ``num_candidates_`` (count of distinct n-grams before filtering).
    """

    def __init__(self, ngram_max: int = 2, min_support: int = 2, max_candidates: int | None = None):
        self.ngram_max = ngram_max
        self.min_support = min_support
        self.max_candidates = max_candidates

    def fit(self, X, y):
        docs = _as_token_lists(X)
        y = _check_labels(y, len(docs))
        if self.ngram_max < 1 or self.min_support < 1:
            raise DataError("ngram_max and min_support must be positive")
        if self.max_candidates is not None and self.max_candidates < 1:
            raise DataError("max_candidates must be positive when set")
        num_classes = int(y.max())

        counts: dict[TokenSeq, np.ndarray] = {}
        for tokens, label in zip(docs, y):
            grams = set()
            for width in range(1, self.ngram_max + 1):
                grams.update(tokens[i : i + width] for i in range(len(tokens) - width + 1))
            for gram in grams:
                per_class = counts.get(gram)
                if per_class is None:
                    per_class = counts[gram] = np.zeros(num_classes, dtype=np.int64)
                per_class[label - 1] += 1

        scored = []
        for gram, per_class in counts.items():
            support = int(per_class.sum())
            if support < self.min_support:
                continue
            label = int(per_class.argmax()) + 1
            precision = int(per_class[label - 1]) / support
            scored.append((gram, label, precision, support))
        scored.sort(key=lambda item: (-item[2], -item[3], len(item[0]), item[0]))
        if self.max_candidates is not None:
            scored = scored[: self.max_candidates]

        self.rules_ = RuleSet(
            tuple(
                Rule(id=i, pattern=gram, label=label, origin="stump")
                for i, (gram, label, _, _) in enumerate(scored)
            )
        )
        self.rule_precisions_ = np.array([p for _, _, p, _ in scored], dtype=np.float64)
        self.rule_supports_ = np.array([s for _, _, _, s in scored], dtype=np.int64)
        self.num_candidates_ = len(counts)
        return self


class ClassifierWeightRuleInducer(BaseEstimator, _RuleApplierMixin):
    """Emit one unigram rule per top positive classifier weight.

    Fits :class:`OneVsRestLogisticRegression` on binary bag-of-words features
    and keeps the ``top_p`` strictly positive (feature, class) weights; each
    becomes a rule mapping the feature's token to that class. Equal weights
    are broken by (feature index, class index). Negative weights are evidence
    against a class and never become rules; if fewer than ``top_p`` positive
    weights exist, all of them are emitted with a warning.
    """

    def __init__(
        self,
        top_p: int = 50,
        l2: float = 1e-3,
        epochs: int = 500,
        learning_rate: float = 0.5,
    ):
        self.top_p = top_p
        self.l2 = l2
        self.epochs = epochs
        self.learning_rate = learning_rate

    def fit(self, X, y):
        docs = _as_token_lists(X)
        y = _check_labels(y, len(docs))
        if self.top_p < 0:
            raise DataError("top_p must be >= 0")
        features, vocab = featurize(docs)
        model = OneVsRestLogisticRegression(
            l2=self.l2, epochs=self.epochs, learning_rate=self.learning_rate
        )
        model.fit(features, y)
        W = model.coef_

        positive = [
            (W[k, i], i, k)
            for i in range(W.shape[1])
            for k in range(W.shape[0])
            if W[k, i] > 0.0
        ]
        positive.sort(key=lambda item: (-item[0], item[1], item[2]))
        if len(positive) < self.top_p:
            warnings.warn(
                f"only {len(positive)} positive weights available, emitting fewer than "
                f"top_p={self.top_p} rules",
                stacklevel=2,
            )
        kept = positive[: self.top_p]

        self.rules_ = RuleSet(
            tuple(
                Rule(id=rank, pattern=(vocab[i],), label=k + 1, origin="classifier_weight")
                for rank, (_, i, k) in enumerate(kept)
            )
        )
        self.rule_weights_ = np.array([wt for wt, _, _ in kept], dtype=np.float64)
        self.vocab_ = vocab
        self.classifier_ = model
        return self


# ---------------------------------------------------------------------------
# corpus-level convenience wrappers
# ---------------------------------------------------------------------------


def _labeled_texts(corpus: Corpus) -> tuple[list[TokenSeq], np.ndarray]:
    if not corpus.labeled:
        raise DataError("corpus has no labeled instances to induce from")
    docs = [inst.tokens for inst in corpus.labeled]
    y = np.array([inst.gold for inst in corpus.labeled], dtype=np.int64)
    return docs, y


def induce_stumps(
    corpus: Corpus, ngram_max: int = 2, min_support: int = 2, max_candidates: int | None = None
) -> RuleSet:
    docs, y = _labeled_texts(corpus)
    inducer = StumpRuleInducer(ngram_max=ngram_max, min_support=min_support, max_candidates=max_candidates)
    return inducer.fit(docs, y).rules_


def induce_classifier_rules(
    corpus: Corpus,
    top_p: int = 50,
    l2: float = 1e-3,
    epochs: int = 500,
    learning_rate: float = 0.5,
) -> RuleSet:
    docs, y = _labeled_texts(corpus)
    inducer = ClassifierWeightRuleInducer(top_p=top_p, l2=l2, epochs=epochs, learning_rate=learning_rate)
    return inducer.fit(docs, y).rules_
