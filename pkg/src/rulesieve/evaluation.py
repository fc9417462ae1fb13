"""Weak-label aggregation and scoring.

Majority vote is the baseline aggregator: per instance, the most frequent
non-abstain label wins and ties abstain. Reports use macro-F1 (unweighted
mean of per-class F1) with a configurable abstain policy, and paired score
lists can be compared with a Wilcoxon signed-rank test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import FiringMatrix, Instance, RuleSet, build_firing_matrix, gold_array
from .errors import DataError

POLICIES = ("abstain_as_wrong", "covered_only")


@dataclass(frozen=True)
class AggregatedLabels:
    """Per-instance aggregated weak labels (0 = no label assigned)."""

    instance_ids: tuple[int, ...]
    labels: np.ndarray
    coverage: float

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))


def majority_vote(firing: FiringMatrix | np.ndarray) -> AggregatedLabels:
    """Most frequent non-abstain label per instance; ties and all-abstain
    rows yield 0."""
    if isinstance(firing, FiringMatrix):
        entries, instance_ids = firing.entries, firing.instance_ids
    else:
        entries = np.asarray(firing, dtype=np.int64)
        instance_ids = tuple(range(entries.shape[0]))
    n, _ = entries.shape
    if n == 0:
        return AggregatedLabels(instance_ids=(), labels=np.zeros(0, dtype=np.int64), coverage=0.0)
    num_classes = int(entries.max()) if entries.size else 0
    if num_classes == 0:
        return AggregatedLabels(instance_ids=instance_ids, labels=np.zeros(n, dtype=np.int64), coverage=0.0)
    counts = np.stack([(entries == k).sum(axis=1) for k in range(1, num_classes + 1)], axis=1)
    top = counts.max(axis=1)
    winners = counts.argmax(axis=1) + 1
    tied = (counts == top[:, None]).sum(axis=1) > 1
    labels = np.where((top > 0) & ~tied, winners, 0).astype(np.int64)
    coverage = int((labels > 0).sum()) / n
    return AggregatedLabels(instance_ids=instance_ids, labels=labels, coverage=coverage)


@dataclass(frozen=True)
class ClassMetrics:
    label: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    macro_f1: float
    micro_precision: float
    per_class: tuple[ClassMetrics, ...]
    coverage: float
    policy: str
    num_classes: int

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "micro_precision": self.micro_precision,
            "coverage": self.coverage,
            "policy": self.policy,
            "num_classes": self.num_classes,
            "per_class": [
                {
                    "label": m.label,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for m in self.per_class
            ],
        }


def macro_f1(
    predictions: AggregatedLabels | np.ndarray,
    gold: Sequence[int] | np.ndarray,
    policy: str = "abstain_as_wrong",
    num_classes: int | None = None,
) -> EvalReport:
    """Unweighted mean of per-class F1 over classes 1..K.

    ``abstain_as_wrong`` counts an abstention (prediction 0) as a miss for
    the gold class; ``covered_only`` drops abstained instances before
    scoring, so coverage gaps do not affect the F1.
    """
    pred = predictions.labels if isinstance(predictions, AggregatedLabels) else np.asarray(predictions, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape:
        raise DataError(f"prediction/gold length mismatch: {pred.shape} vs {gold.shape}")
    if policy not in POLICIES:
        raise DataError(f"unknown abstain policy {policy!r}")
    if gold.size and gold.min() < 1:
        raise DataError("gold labels must be >= 1")
    if num_classes is None:
        num_classes = int(max(gold.max(initial=0), pred.max(initial=0)))
    coverage = (int((pred > 0).sum()) / len(pred)) if len(pred) else 0.0

    covered = pred > 0
    correct_covered = int((covered & (pred == gold)).sum())
    micro_precision = correct_covered / int(covered.sum()) if covered.any() else 0.0

    if policy == "covered_only":
        pred, gold = pred[covered], gold[covered]

    per_class = []
    for k in range(1, num_classes + 1):
        tp = int(((pred == k) & (gold == k)).sum())
        fp = int(((pred == k) & (gold != k)).sum())
        fn = int(((gold == k) & (pred != k)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class.append(ClassMetrics(label=k, precision=precision, recall=recall, f1=f1, support=tp + fn))
    macro = sum(m.f1 for m in per_class) / num_classes if num_classes else 0.0
    return EvalReport(
        macro_f1=macro,
        micro_precision=micro_precision,
        per_class=tuple(per_class),
        coverage=coverage,
        policy=policy,
        num_classes=num_classes,
    )


@dataclass(frozen=True)
class TestSetPrecision:
    """Micro-precision over all (instance, rule) firing events."""

    value: float
    firing_events: int
    correct_events: int

    @property
    def no_fire(self) -> bool:
        return self.firing_events == 0


def test_set_precision(rules: RuleSet, test: Sequence[Instance]) -> TestSetPrecision:
    """Fraction of firing events on ``test`` whose rule label matches gold."""
    gold = gold_array(test)
    entries = build_firing_matrix(rules, test).entries
    fired = entries > 0
    events = int(fired.sum())
    if events == 0:
        return TestSetPrecision(value=0.0, firing_events=0, correct_events=0)
    correct = int((fired & (entries == gold[:, None])).sum())
    return TestSetPrecision(value=correct / events, firing_events=events, correct_events=correct)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min of the positive- and negative-rank sums
    z: float  # signed: computed from the positive-rank sum, flips with (x, y)
    p_value: float  # two-sided, normal approximation
    n: int  # pairs remaining after zero differences are dropped


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _nonzero_diff_ranks(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("paired samples must be 1-d arrays of equal length")
    diffs = x - y
    diffs = diffs[diffs != 0.0]
    if len(diffs) == 0:
        raise DataError("all paired differences are zero")
    if len(diffs) < 5:
        raise DataError("need at least 5 nonzero differences")
    return diffs, _average_ranks(np.abs(diffs))


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test with the normal approximation.

    Zero differences are dropped; tied absolute differences share average
    ranks. No tie or continuity correction is applied to the variance. The
    statistic is the smaller of the two signed-rank sums; ``z`` is computed
    from the positive-rank sum so that swapping the samples flips its sign
    while leaving the statistic and the p-value unchanged.
    """
    diffs, ranks = _nonzero_diff_ranks(x, y)
    n = len(diffs)
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    mean = n * (n + 1) / 4.0
    sd = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0)
    z = (w_plus - mean) / sd
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return WilcoxonResult(statistic=min(w_plus, w_minus), z=z, p_value=p, n=n)


def wilcoxon_exact_p(x: Sequence[float], y: Sequence[float]) -> float:
    """Exact two-sided p-value by enumerating all sign assignments.

    Feasible for up to 20 nonzero differences; intended as a cross-check of
    the normal approximation on small samples.
    """
    diffs, ranks = _nonzero_diff_ranks(x, y)
    n = len(diffs)
    if n > 20:
        raise DataError("exact enumeration supported only for n <= 20")
    w_plus = float(ranks[diffs > 0].sum())
    sums = np.zeros(1, dtype=np.float64)
    for rank in ranks:
        sums = np.concatenate([sums, sums + rank])
    p_low = float((sums <= w_plus + 1e-12).sum()) / len(sums)
    p_high = float((sums >= w_plus - 1e-12).sum()) / len(sums)
    return min(1.0, 2.0 * min(p_low, p_high))
