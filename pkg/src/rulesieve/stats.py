"""Rule-quality statistics over labeled and unlabeled instances.

All fractions are computed as exact integer counts divided by the number of
instances, so results match a per-instance enumeration bit for bit. Pairwise
agreement/conflict use the full unlabeled-set size as denominator; the report
layer additionally exposes the overlap-normalized variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, FiringMatrix, Instance, Rule, RuleSet, build_firing_matrix, gold_array
from .errors import DataError

# ---------------------------------------------------------------------------
# matrix-level primitives (operate on a dense weak-label matrix)
# ---------------------------------------------------------------------------


def _as_entries(matrix: FiringMatrix | np.ndarray) -> np.ndarray:
    entries = matrix.entries if isinstance(matrix, FiringMatrix) else np.asarray(matrix)
    if entries.ndim != 2:
        raise DataError("expected a 2-d firing matrix")
    return entries


def _select_cols(entries: np.ndarray, cols: Sequence[int] | None) -> np.ndarray:
    if cols is None:
        return entries
    return entries[:, list(cols)]


def matrix_coverage(matrix: FiringMatrix | np.ndarray, cols: Sequence[int] | None = None) -> float:
    """Fraction of rows where at least one selected column fires."""
    entries = _select_cols(_as_entries(matrix), cols)
    if entries.shape[0] == 0:
        raise DataError("coverage undefined on an empty instance set")
    if entries.shape[1] == 0:
        return 0.0
    covered = int(((entries > 0).any(axis=1)).sum())
    return covered / entries.shape[0]


def matrix_pair_overlap(matrix: FiringMatrix | np.ndarray, i: int, j: int) -> float:
    """Fraction of rows where columns i and j both fire."""
    entries = _as_entries(matrix)
    if entries.shape[0] == 0:
        raise DataError("overlap undefined on an empty instance set")
    both = int(((entries[:, i] > 0) & (entries[:, j] > 0)).sum())
    return both / entries.shape[0]


def matrix_pair_agreement(matrix: FiringMatrix | np.ndarray, i: int, j: int) -> float:
    """Fraction of rows where columns i and j both fire with the same label."""
    entries = _as_entries(matrix)
    if entries.shape[0] == 0:
        raise DataError("agreement undefined on an empty instance set")
    ci, cj = entries[:, i], entries[:, j]
    same = int(((ci > 0) & (cj > 0) & (ci == cj)).sum())
    return same / entries.shape[0]


def matrix_pair_conflict(matrix: FiringMatrix | np.ndarray, i: int, j: int) -> float:
    """Fraction of rows where columns i and j both fire with different labels."""
    entries = _as_entries(matrix)
    if entries.shape[0] == 0:
        raise DataError("conflict undefined on an empty instance set")
    ci, cj = entries[:, i], entries[:, j]
    diff = int(((ci > 0) & (cj > 0) & (ci != cj)).sum())
    return diff / entries.shape[0]


def matrix_non_conflict(matrix: FiringMatrix | np.ndarray, cols: Sequence[int] | None = None) -> float:
    """Fraction of rows whose firing columns all agree.

    Rows where zero or one column fires count as non-conflicting, so the
    empty selection scores 1.0.
    """
    entries = _select_cols(_as_entries(matrix), cols)
    n = entries.shape[0]
    if n == 0:
        raise DataError("non-conflict undefined on an empty instance set")
    if entries.shape[1] == 0:
        return 1.0
    # A row conflicts iff it holds two distinct non-abstain labels, i.e. the
    # row max differs from the row min over firing cells.
    high = entries.max(axis=1)
    low = np.where(entries > 0, entries, np.iinfo(np.int64).max).min(axis=1)
    conflicts = int(((high > 0) & (high != low)).sum())
    return (n - conflicts) / n


def matrix_column_precision(matrix: FiringMatrix | np.ndarray, gold: np.ndarray, j: int) -> float:
    """Fraction of column j's firings that match gold; 0.0 if it never fires."""
    entries = _as_entries(matrix)
    col = entries[:, j]
    fires = int((col > 0).sum())
    if fires == 0:
        return 0.0
    correct = int(((col > 0) & (col == gold)).sum())
    return correct / fires


# ---------------------------------------------------------------------------
# rule-level operations
# ---------------------------------------------------------------------------


def _ruleset(rules: RuleSet | Iterable[Rule]) -> RuleSet:
    return rules if isinstance(rules, RuleSet) else RuleSet(tuple(rules))


def rule_precision(rule: Rule, labeled: Sequence[Instance]) -> float:
    """Fraction of the rule's labeled-set firings that match gold.

    A rule that never fires on the labeled set has precision 0.0 by
    convention (see :class:`RuleStats.no_fire`), not an error.
    """
    fm = build_firing_matrix(RuleSet((rule,)), labeled)
    return matrix_column_precision(fm, gold_array(labeled), 0)


def set_coverage(rules: RuleSet | Iterable[Rule], instances: Sequence[Instance]) -> float:
    """Fraction of ``instances`` on which at least one rule fires."""
    ruleset = _ruleset(rules)
    if len(instances) == 0:
        raise DataError("coverage undefined on an empty instance set")
    if len(ruleset) == 0:
        return 0.0
    return matrix_coverage(build_firing_matrix(ruleset, instances))


def pair_agreement(rule_i: Rule, rule_j: Rule, instances: Sequence[Instance]) -> float:
    """Fraction of ``instances`` where both rules fire with equal labels."""
    fm = build_firing_matrix(RuleSet((rule_i, rule_j)) if rule_i.id != rule_j.id else RuleSet((rule_i,)), instances)
    if rule_i.id == rule_j.id:
        return matrix_pair_agreement(fm, 0, 0)
    return matrix_pair_agreement(fm, 0, 1)


def pair_conflict(rule_i: Rule, rule_j: Rule, instances: Sequence[Instance]) -> float:
    """Fraction of ``instances`` where both rules fire with different labels."""
    fm = build_firing_matrix(RuleSet((rule_i, rule_j)) if rule_i.id != rule_j.id else RuleSet((rule_i,)), instances)
    if rule_i.id == rule_j.id:
        return matrix_pair_conflict(fm, 0, 0)
    return matrix_pair_conflict(fm, 0, 1)


def set_non_conflict(rules: RuleSet | Iterable[Rule], instances: Sequence[Instance]) -> float:
    """Fraction of ``instances`` on which all firing rules agree."""
    ruleset = _ruleset(rules)
    if len(instances) == 0:
        raise DataError("non-conflict undefined on an empty instance set")
    if len(ruleset) == 0:
        return 1.0
    return matrix_non_conflict(build_firing_matrix(ruleset, instances))


# ---------------------------------------------------------------------------
# aggregated statistics records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleStats:
    """Per-rule quality numbers."""

    rule_id: int
    precision: float
    labeled_coverage: float
    unlabeled_coverage: float
    fires_labeled: int
    fires_unlabeled: int

    @property
    def no_fire(self) -> bool:
        return self.fires_labeled == 0


@dataclass(frozen=True)
class PairStats:
    """Pairwise interaction numbers over the unlabeled set."""

    joint_coverage: float
    agreement: float
    conflict: float
    overlap: float


@dataclass(frozen=True)
class SetStats:
    """Committed-set quality numbers."""

    coverage: float
    non_conflict: float
    avg_precision: float
    labeled_coverage: float


def compute_rule_stats(rules: RuleSet, corpus: Corpus) -> list[RuleStats]:
    fm_l = build_firing_matrix(rules, corpus.labeled)
    fm_u = build_firing_matrix(rules, corpus.unlabeled)
    gold = gold_array(corpus.labeled)
    n_l, n_u = len(corpus.labeled), len(corpus.unlabeled)
    out = []
    for j, rule in enumerate(rules):
        fires_l = int((fm_l.entries[:, j] > 0).sum())
        fires_u = int((fm_u.entries[:, j] > 0).sum())
        out.append(
            RuleStats(
                rule_id=rule.id,
                precision=matrix_column_precision(fm_l, gold, j) if n_l else 0.0,
                labeled_coverage=fires_l / n_l if n_l else 0.0,
                unlabeled_coverage=fires_u / n_u if n_u else 0.0,
                fires_labeled=fires_l,
                fires_unlabeled=fires_u,
            )
        )
    return out


def compute_pair_stats(rule_i: Rule, rule_j: Rule, instances: Sequence[Instance]) -> PairStats:
    fm = build_firing_matrix(RuleSet((rule_i, rule_j)), instances)
    n = len(instances)
    if n == 0:
        raise DataError("pair statistics undefined on an empty instance set")
    fires_i = int((fm.entries[:, 0] > 0).sum())
    fires_j = int((fm.entries[:, 1] > 0).sum())
    overlap_count = int(((fm.entries[:, 0] > 0) & (fm.entries[:, 1] > 0)).sum())
    return PairStats(
        joint_coverage=(fires_i + fires_j - overlap_count) / n,
        agreement=matrix_pair_agreement(fm, 0, 1),
        conflict=matrix_pair_conflict(fm, 0, 1),
        overlap=overlap_count / n,
    )


def compute_set_stats(rules: RuleSet, corpus: Corpus) -> SetStats:
    if len(rules) == 0:
        return SetStats(coverage=0.0, non_conflict=1.0, avg_precision=0.0, labeled_coverage=0.0)
    per_rule = compute_rule_stats(rules, corpus)
    return SetStats(
        coverage=set_coverage(rules, corpus.unlabeled),
        non_conflict=set_non_conflict(rules, corpus.unlabeled),
        avg_precision=sum(r.precision for r in per_rule) / len(per_rule),
        labeled_coverage=matrix_coverage(build_firing_matrix(rules, corpus.labeled)) if corpus.labeled else 0.0,
    )


# ---------------------------------------------------------------------------
# pairwise similarity matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric nonnegative rule-pair similarity scores with a zero diagonal."""

    values: np.ndarray
    rule_ids: tuple[int, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "rule_ids", tuple(self.rule_ids))
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError("similarity matrix must be square")
        if values.shape[0] != len(self.rule_ids):
            raise DataError("similarity matrix size does not match rule ids")
        if len(set(self.rule_ids)) != len(self.rule_ids):
            raise DataError("duplicate rule ids in similarity matrix")
        if not np.array_equal(values, values.T):
            raise DataError("similarity matrix must be symmetric")
        if np.any(np.diagonal(values) != 0.0):
            raise DataError("similarity matrix diagonal must be zero")
        if values.size and (not np.isfinite(values).all() or values.min() < 0.0):
            raise DataError("similarity entries must be finite and nonnegative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.rule_ids)

    def position(self, rule_id: int) -> int:
        try:
            return self.rule_ids.index(rule_id)
        except ValueError as exc:
            raise DataError(f"unknown rule id {rule_id}") from exc


def pairwise_components(
    rules: RuleSet, labeled: Sequence[Instance], unlabeled: Sequence[Instance]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Precision vector plus pairwise joint-coverage and agreement matrices.

    These are the weight-independent ingredients of the similarity score, so
    a grid search over the coverage/agreement weights can reuse one pass.
    """
    if len(rules) == 0:
        raise DataError("similarity requires at least one rule")
    n_u = len(unlabeled)
    if n_u == 0:
        raise DataError("similarity requires a nonempty unlabeled set")

    fm_u = build_firing_matrix(rules, unlabeled)
    fires = (fm_u.entries > 0).astype(np.float64)
    # 0/1 float matmuls are exact for counts far below 2**53.
    overlap = fires.T @ fires
    per_rule = fires.sum(axis=0)
    joint_counts = per_rule[:, None] + per_rule[None, :] - overlap
    agree_counts = np.zeros_like(overlap)
    for label in np.unique(fm_u.entries):
        if label == 0:
            continue
        hits = (fm_u.entries == label).astype(np.float64)
        agree_counts += hits.T @ hits

    if len(labeled):
        fm_l = build_firing_matrix(rules, labeled)
        gold = gold_array(labeled)
        alpha = np.array(
            [matrix_column_precision(fm_l, gold, j) for j in range(len(rules))], dtype=np.float64
        )
    else:
        alpha = np.zeros(len(rules), dtype=np.float64)
    return alpha, joint_counts / n_u, agree_counts / n_u


def similarity_from_components(
    alpha: np.ndarray,
    joint_coverage: np.ndarray,
    agreement: np.ndarray,
    rule_ids: Sequence[int],
    w: float = 3.0,
    gamma: float = 0.3,
) -> SimilarityMatrix:
    if w < 0 or gamma < 0:
        raise DataError("coverage and agreement weights must be nonnegative")
    values = alpha[:, None] + alpha[None, :] + w * joint_coverage + gamma * agreement
    np.fill_diagonal(values, 0.0)
    return SimilarityMatrix(values=values, rule_ids=tuple(rule_ids))


def build_similarity_matrix(
    rules: RuleSet,
    labeled: Sequence[Instance],
    unlabeled: Sequence[Instance],
    w: float = 3.0,
    gamma: float = 0.3,
) -> SimilarityMatrix:
    """Pairwise rule similarity: precision of both rules, plus ``w`` times
    their joint unlabeled coverage, plus ``gamma`` times their agreement."""
    alpha, joint, agree = pairwise_components(rules, labeled, unlabeled)
    return similarity_from_components(alpha, joint, agree, rules.ids, w=w, gamma=gamma)


# ---------------------------------------------------------------------------
# JSON statistics report
# ---------------------------------------------------------------------------


def make_stats_report(rules: RuleSet, corpus: Corpus) -> dict:
    """Per-rule and set-level quality report for a rule set over a corpus.

    Agreement/conflict are reported under both denominators (full unlabeled
    set vs pairwise overlap), since either convention is defensible.
    """
    from .evaluation import test_set_precision

    n_u = len(corpus.unlabeled)
    per_rule_stats = compute_rule_stats(rules, corpus)
    test_precisions: list[float | None] = [None] * len(rules)
    if corpus.test:
        fm_t = build_firing_matrix(rules, corpus.test)
        gold_t = gold_array(corpus.test)
        test_precisions = [matrix_column_precision(fm_t, gold_t, j) for j in range(len(rules))]

    fm_u = build_firing_matrix(rules, corpus.unlabeled) if n_u and len(rules) else None
    agree_u = agree_ov = conflict_u = conflict_ov = None
    if fm_u is not None and len(rules) >= 2:
        fires = (fm_u.entries > 0).astype(np.float64)
        overlap = fires.T @ fires
        agree = np.zeros_like(overlap)
        for label in np.unique(fm_u.entries):
            if label == 0:
                continue
            hits = (fm_u.entries == label).astype(np.float64)
            agree += hits.T @ hits
        conflict = overlap - agree
        with np.errstate(invalid="ignore", divide="ignore"):
            agree_ov_m = np.where(overlap > 0, agree / np.where(overlap > 0, overlap, 1.0), 0.0)
            conflict_ov_m = np.where(overlap > 0, conflict / np.where(overlap > 0, overlap, 1.0), 0.0)
        m = len(rules)
        off = ~np.eye(m, dtype=bool)

        def _row_means(matrix):
            return [float(matrix[j][off[j]].mean()) for j in range(m)]

        agree_u = _row_means(agree / n_u)
        agree_ov = _row_means(agree_ov_m)
        conflict_u = _row_means(conflict / n_u)
        conflict_ov = _row_means(conflict_ov_m)

    rule_rows = []
    for j, (rule, rs) in enumerate(zip(rules, per_rule_stats)):
        row = {
            "id": rule.id,
            "pattern": list(rule.pattern),
            "label": rule.label,
            "origin": rule.origin,
            "precision_labeled": rs.precision,
            "no_fire": rs.no_fire,
            "fires_labeled": rs.fires_labeled,
            "labeled_coverage": rs.labeled_coverage,
            "coverage_unlabeled": rs.unlabeled_coverage,
            "fires_unlabeled": rs.fires_unlabeled,
            "precision_test": test_precisions[j],
        }
        if agree_u is not None:
            row["mean_agreement"] = {"over_unlabeled": agree_u[j], "over_overlap": agree_ov[j]}
            row["mean_conflict"] = {"over_unlabeled": conflict_u[j], "over_overlap": conflict_ov[j]}
        rule_rows.append(row)

    set_row = {
        "num_rules": len(rules),
        "coverage_unlabeled": None,
        "labeled_coverage": (
            matrix_coverage(build_firing_matrix(rules, corpus.labeled))
            if corpus.labeled and len(rules)
            else 0.0
        ),
        "avg_precision_labeled": (
            sum(rs.precision for rs in per_rule_stats) / len(per_rule_stats) if per_rule_stats else 0.0
        ),
        "non_conflict": None,
        "test_micro_precision": None,
    }
    if fm_u is not None:
        set_row["coverage_unlabeled"] = matrix_coverage(fm_u)
        covered = int(((fm_u.entries > 0).any(axis=1)).sum())
        non_conflict_all = matrix_non_conflict(fm_u)
        conflicts = n_u - round(non_conflict_all * n_u)
        set_row["non_conflict"] = {
            "over_unlabeled": non_conflict_all,
            "over_covered": (covered - conflicts) / covered if covered else 1.0,
        }
    if corpus.test:
        set_row["test_micro_precision"] = test_set_precision(rules, corpus.test).value
    return {"rules": rule_rows, "set": set_row}
