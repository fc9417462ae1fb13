"""Committed-set selection from a candidate rule set.

Two objectives are implemented:

* a precision/coverage/agreement score over a statistics oracle, maximized
  by naive greedy seeded with the best singleton, stopping once the labeled
  set is fully covered or the budget is reached; this objective is *not*
  submodular, so the greedy carries no approximation guarantee;
* a graph-cut score over a pairwise similarity matrix (total similarity
  mass between all candidates and the selected set, minus ``lam`` times the
  mass inside the selected set), which is submodular for nonnegative
  similarities and non-monotone once ``lam`` exceeds 0.5. It is maximized
  by naive greedy or by an equivalent lazy (priority-queue) greedy.

Ties in every argmax are broken toward the lowest rule id, and the greedy
runs to the full budget even through negative marginal gains; such steps are
flagged in the selection trace so callers may truncate afterwards.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Corpus, FiringMatrix, RuleSet, build_firing_matrix, gold_array
from .errors import DataError, InternalError
from .evaluation import macro_f1, majority_vote
from .stats import (
    SimilarityMatrix,
    build_similarity_matrix,
    matrix_column_precision,
    matrix_coverage,
    matrix_non_conflict,
    pairwise_components,
    similarity_from_components,
)

#: Default diversity trade-off, coverage weight and agreement weight.
DEFAULT_LAMBDA = 0.7
DEFAULT_W = 3.0
DEFAULT_GAMMA = 0.3

#: Grids searched by :func:`tune_weights`.
DEFAULT_W_GRID = tuple(float(w) for w in range(1, 11))
DEFAULT_GAMMA_GRID = tuple(i / 10 for i in range(11))

_MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class SelectionStep:
    rule_id: int
    gain: float
    objective: float
    negative_gain: bool

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "gain": self.gain,
            "objective": self.objective,
            "negative_gain": self.negative_gain,
        }


@dataclass(frozen=True)
class SelectionTrace:
    """Ordered record of greedy choices: rule id, marginal gain, objective after."""

    steps: tuple[SelectionStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def selected_ids(self) -> tuple[int, ...]:
        return tuple(step.rule_id for step in self.steps)

    @property
    def final_objective(self) -> float:
        return self.steps[-1].objective if self.steps else 0.0

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "selected_ids": list(self.selected_ids),
            "objective": self.final_objective,
        }


# ---------------------------------------------------------------------------
# statistics oracles
# ---------------------------------------------------------------------------


class StatsOracle:
    """Lookup interface the precision/coverage objective is evaluated against.

    Implementations must answer consistently across repeated queries.
    """

    def precision(self, rule_id: int) -> float:
        raise NotImplementedError

    def coverage(self, rule_ids: Iterable[int]) -> float:
        raise NotImplementedError

    def non_conflict(self, rule_ids: Iterable[int]) -> float:
        raise NotImplementedError

    def labeled_coverage(self, rule_ids: Iterable[int]) -> float:
        raise NotImplementedError


class CorpusStatsOracle(StatsOracle):
    """Oracle computed from firing matrices over a corpus; queries are cached."""

    def __init__(self, rules: RuleSet, corpus: Corpus):
        self._fm_labeled = build_firing_matrix(rules, corpus.labeled)
        self._fm_unlabeled = build_firing_matrix(rules, corpus.unlabeled)
        self._position = {rule_id: j for j, rule_id in enumerate(rules.ids)}
        if corpus.labeled:
            gold = gold_array(corpus.labeled)
            self._precision = {
                rule_id: matrix_column_precision(self._fm_labeled, gold, j)
                for rule_id, j in self._position.items()
            }
        else:
            self._precision = {rule_id: 0.0 for rule_id in rules.ids}
        self._coverage_cache: dict[frozenset, float] = {}
        self._non_conflict_cache: dict[frozenset, float] = {}
        self._labeled_coverage_cache: dict[frozenset, float] = {}

    def _positions(self, rule_ids: Iterable[int]) -> list[int]:
        try:
            return [self._position[rid] for rid in rule_ids]
        except KeyError as exc:
            raise DataError(f"unknown rule id {exc.args[0]}") from exc

    def precision(self, rule_id: int) -> float:
        try:
            return self._precision[rule_id]
        except KeyError as exc:
            raise DataError(f"unknown rule id {rule_id}") from exc

    def coverage(self, rule_ids: Iterable[int]) -> float:
        key = frozenset(rule_ids)
        if key not in self._coverage_cache:
            if self._fm_unlabeled.shape[0] == 0:
                raise DataError("coverage undefined: corpus has no unlabeled instances")
            self._coverage_cache[key] = matrix_coverage(self._fm_unlabeled, self._positions(key))
        return self._coverage_cache[key]

    def non_conflict(self, rule_ids: Iterable[int]) -> float:
        key = frozenset(rule_ids)
        if key not in self._non_conflict_cache:
            if self._fm_unlabeled.shape[0] == 0:
                raise DataError("non-conflict undefined: corpus has no unlabeled instances")
            self._non_conflict_cache[key] = matrix_non_conflict(self._fm_unlabeled, self._positions(key))
        return self._non_conflict_cache[key]

    def labeled_coverage(self, rule_ids: Iterable[int]) -> float:
        key = frozenset(rule_ids)
        if key not in self._labeled_coverage_cache:
            if self._fm_labeled.shape[0] == 0:
                raise DataError("labeled coverage undefined: corpus has no labeled instances")
            self._labeled_coverage_cache[key] = matrix_coverage(self._fm_labeled, self._positions(key))
        return self._labeled_coverage_cache[key]


class TableStatsOracle(StatsOracle):
    """Oracle backed by explicit lookup tables (useful for tests and what-ifs)."""

    def __init__(
        self,
        precisions: Mapping[int, float],
        coverages: Mapping[Iterable[int], float],
        non_conflicts: Mapping[Iterable[int], float],
        labeled_coverages: Mapping[Iterable[int], float] | None = None,
        default_labeled_coverage: float = 0.0,
    ):
        self._precisions = dict(precisions)
        self._coverages = {frozenset(k): v for k, v in coverages.items()}
        self._non_conflicts = {frozenset(k): v for k, v in non_conflicts.items()}
        self._labeled = {frozenset(k): v for k, v in (labeled_coverages or {}).items()}
        self._default_labeled = default_labeled_coverage

    def precision(self, rule_id: int) -> float:
        try:
            return self._precisions[rule_id]
        except KeyError as exc:
            raise DataError(f"no precision entry for rule {rule_id}") from exc

    def coverage(self, rule_ids: Iterable[int]) -> float:
        key = frozenset(rule_ids)
        try:
            return self._coverages[key]
        except KeyError as exc:
            raise DataError(f"no coverage entry for {sorted(key)}") from exc

    def non_conflict(self, rule_ids: Iterable[int]) -> float:
        key = frozenset(rule_ids)
        try:
            return self._non_conflicts[key]
        except KeyError as exc:
            raise DataError(f"no non-conflict entry for {sorted(key)}") from exc

    def labeled_coverage(self, rule_ids: Iterable[int]) -> float:
        return self._labeled.get(frozenset(rule_ids), self._default_labeled)


# ---------------------------------------------------------------------------
# precision / coverage / agreement objective
# ---------------------------------------------------------------------------


def precision_coverage_score(
    rule_ids: Iterable[int],
    oracle: StatsOracle,
    coeffs: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> float:
    """Weighted sum of mean precision, set coverage and set non-conflict.

    The precision term divides by the set size, so the score is undefined
    (and raises) for the empty set.
    """
    ids = list(dict.fromkeys(rule_ids))
    if not ids:
        raise DataError("precision/coverage objective undefined for an empty rule set")
    c_prec, c_cov, c_agree = coeffs
    if min(coeffs) < 0:
        raise DataError("objective coefficients must be nonnegative")
    mean_precision = sum(oracle.precision(rid) for rid in ids) / len(ids)
    return c_prec * mean_precision + c_cov * oracle.coverage(ids) + c_agree * oracle.non_conflict(ids)


def select_precision_coverage(
    rule_ids: Sequence[int],
    oracle: StatsOracle,
    k: int,
    coeffs: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> tuple[list[int], SelectionTrace]:
    """Greedy maximization of :func:`precision_coverage_score`.

    Seeds with the best-scoring singleton, then repeatedly adds the candidate
    with the largest marginal gain while the labeled set is not fully covered
    and the budget ``k`` is not exhausted. The seed step's recorded gain is
    the singleton's score itself.
    """
    if k < 0:
        raise DataError("budget k must be >= 0")
    candidates = sorted(set(rule_ids))
    if not candidates:
        raise DataError("cannot select from an empty candidate set")
    if k == 0:
        return [], SelectionTrace(())

    best_id, best_value = None, -np.inf
    for rid in candidates:
        value = precision_coverage_score([rid], oracle, coeffs)
        if value > best_value:
            best_id, best_value = rid, value
    selected = [best_id]
    steps = [SelectionStep(best_id, gain=best_value, objective=best_value, negative_gain=best_value < 0)]
    current = best_value

    while len(selected) < k and oracle.labeled_coverage(selected) < 1.0:
        remaining = [rid for rid in candidates if rid not in selected]
        if not remaining:
            break
        best_id, best_objective = None, -np.inf
        for rid in remaining:
            value = precision_coverage_score(selected + [rid], oracle, coeffs)
            if value > best_objective:
                best_id, best_objective = rid, value
        gain = best_objective - current
        selected.append(best_id)
        steps.append(SelectionStep(best_id, gain=gain, objective=best_objective, negative_gain=gain < 0))
        current = best_objective

    return selected, SelectionTrace(tuple(steps))


# ---------------------------------------------------------------------------
# graph-cut objective
# ---------------------------------------------------------------------------


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise DataError("diversity trade-off lam must lie in [0, 1]")


def _gc_value(values: np.ndarray, positions: Sequence[int], lam: float) -> float:
    if not positions:
        return 0.0
    # Canonical column order: a set function's value must not depend on the
    # order the members are presented in, down to float rounding.
    positions = sorted(positions)
    cross = values[:, positions].sum()
    inner = values[np.ix_(positions, positions)].sum()
    return float(cross - lam * inner)


def graph_cut_score(sim: SimilarityMatrix, rule_ids: Iterable[int], lam: float = DEFAULT_LAMBDA) -> float:
    """Graph-cut value of a selected set: similarity mass between the full
    candidate set and the selection, minus ``lam`` times the mass among the
    selected pairs. The empty set scores 0."""
    _check_lambda(lam)
    ids = list(rule_ids)
    if len(set(ids)) != len(ids):
        raise DataError("selected rule ids must be distinct")
    return _gc_value(sim.values, [sim.position(rid) for rid in ids], lam)


def _selection_order(sim: SimilarityMatrix) -> list[int]:
    # Candidate scan order: ascending rule id, so strict argmax comparisons
    # resolve ties toward the lowest id.
    return sorted(range(len(sim)), key=lambda pos: sim.rule_ids[pos])


def _validate_marginal(values: np.ndarray, selected: list[int], pos: int, gain: float, lam: float) -> None:
    scratch = _gc_value(values, selected + [pos], lam) - _gc_value(values, selected, lam)
    if abs(gain - scratch) > _MARGINAL_TOL:
        raise InternalError(
            f"incremental marginal {gain!r} disagrees with from-scratch value {scratch!r} "
            f"at step {len(selected) + 1}"
        )


def select_graph_cut(
    sim: SimilarityMatrix,
    k: int,
    lam: float = DEFAULT_LAMBDA,
    method: str = "naive",
    validate: bool = True,
) -> tuple[list[int], SelectionTrace]:
    """Greedy maximization of :func:`graph_cut_score` under a budget of ``k``.

    ``method="naive"`` rescans every candidate each step; ``method="lazy"``
    uses a stale-marginal priority queue, valid because marginal gains only
    shrink as the selection grows, and produces the identical selection.
    With ``validate=True`` every accepted marginal is re-checked against a
    from-scratch evaluation and a mismatch raises :class:`InternalError`.
    """
    _check_lambda(lam)
    if method not in ("naive", "lazy"):
        raise DataError(f"unknown greedy method {method!r}")
    if k < 0:
        raise DataError("budget k must be >= 0")
    if k > len(sim):
        raise DataError(f"budget k={k} exceeds candidate count {len(sim)}")

    values = sim.values
    colsum = values.sum(axis=0)
    # penalty[v] accumulates the similarity of v to the selected set; adding v
    # changes the objective by colsum[v] - 2*lam*penalty[v] (symmetry, zero diagonal).
    penalty = np.zeros(len(sim))
    order = _selection_order(sim)
    selected: list[int] = []
    steps: list[SelectionStep] = []
    objective = 0.0

    if method == "lazy":
        heap = [(-colsum[pos], sim.rule_ids[pos], pos, 0) for pos in order]
        heapq.heapify(heap)

    while len(selected) < k:
        if method == "naive":
            best_pos, best_gain = None, -np.inf
            chosen = set(selected)
            for pos in order:
                if pos in chosen:
                    continue
                gain = float(colsum[pos] - 2.0 * lam * penalty[pos])
                if gain > best_gain:
                    best_pos, best_gain = pos, gain
        else:
            while True:
                neg_gain, rule_id, pos, computed_at = heapq.heappop(heap)
                if computed_at == len(selected):
                    best_pos, best_gain = pos, -neg_gain
                    break
                fresh = float(colsum[pos] - 2.0 * lam * penalty[pos])
                heapq.heappush(heap, (-fresh, rule_id, pos, len(selected)))

        if validate:
            _validate_marginal(values, selected, best_pos, best_gain, lam)
        objective += best_gain
        selected.append(best_pos)
        penalty += values[best_pos]
        steps.append(
            SelectionStep(
                rule_id=sim.rule_ids[best_pos],
                gain=best_gain,
                objective=objective,
                negative_gain=best_gain < 0,
            )
        )

    return [sim.rule_ids[pos] for pos in selected], SelectionTrace(tuple(steps))


# ---------------------------------------------------------------------------
# estimator wrappers
# ---------------------------------------------------------------------------


class GraphCutRuleFilter(BaseEstimator):
    """Select ``k`` rules by greedy graph-cut maximization over the pairwise
    similarity built from a corpus.

    After ``fit(rules, corpus)``: ``committed_`` (RuleSet in selection order),
    ``trace_`` (:class:`SelectionTrace`) and ``similarity_``.
    """

    def __init__(
        self,
        k: int,
        lam: float = DEFAULT_LAMBDA,
        w: float = DEFAULT_W,
        gamma: float = DEFAULT_GAMMA,
        method: str = "naive",
        validate: bool = True,
    ):
        self.k = k
        self.lam = lam
        self.w = w
        self.gamma = gamma
        self.method = method
        self.validate = validate

    def fit(self, rules: RuleSet, corpus: Corpus):
        self.similarity_ = build_similarity_matrix(
            rules, corpus.labeled, corpus.unlabeled, w=self.w, gamma=self.gamma
        )
        ids, trace = select_graph_cut(
            self.similarity_, self.k, lam=self.lam, method=self.method, validate=self.validate
        )
        self.committed_ = rules.subset(ids)
        self.trace_ = trace
        return self

    def transform(self, instances) -> FiringMatrix:
        check_is_fitted(self, "committed_")
        return build_firing_matrix(self.committed_, instances)


class PrecisionCoverageRuleFilter(BaseEstimator):
    """Select rules by greedy maximization of the precision/coverage objective.

    ``coeffs`` gives the three term weights directly; when None they default
    to ``(w, 1 - w, gamma)`` with ``w`` restricted to [0, 1].
    """

    def __init__(
        self,
        k: int,
        w: float = 0.5,
        gamma: float = DEFAULT_GAMMA,
        coeffs: tuple[float, float, float] | None = None,
    ):
        self.k = k
        self.w = w
        self.gamma = gamma
        self.coeffs = coeffs

    def _coeffs(self) -> tuple[float, float, float]:
        if self.coeffs is not None:
            return self.coeffs
        if not 0.0 <= self.w <= 1.0:
            raise DataError("w must lie in [0, 1] when coeffs are derived as (w, 1-w, gamma)")
        return (self.w, 1.0 - self.w, self.gamma)

    def fit(self, rules: RuleSet, corpus: Corpus):
        self.oracle_ = CorpusStatsOracle(rules, corpus)
        ids, trace = select_precision_coverage(rules.ids, self.oracle_, self.k, self._coeffs())
        self.committed_ = rules.subset(ids)
        self.trace_ = trace
        return self

    def transform(self, instances) -> FiringMatrix:
        check_is_fitted(self, "committed_")
        return build_firing_matrix(self.committed_, instances)


# ---------------------------------------------------------------------------
# weight tuning
# ---------------------------------------------------------------------------


def tune_weights(
    rules: RuleSet,
    corpus: Corpus,
    k: int,
    lam: float = DEFAULT_LAMBDA,
    w_grid: Sequence[float] | None = None,
    gamma_grid: Sequence[float] | None = None,
    policy: str = "abstain_as_wrong",
) -> tuple[float, float]:
    """Grid-search the coverage and agreement weights on the validation set.

    Each grid point selects a committed set with the graph-cut greedy, labels
    the validation instances by majority vote, and is scored by macro-F1
    against validation gold. Ties prefer the smaller ``w``, then the smaller
    ``gamma``.
    """
    w_grid = DEFAULT_W_GRID if w_grid is None else tuple(w_grid)
    gamma_grid = DEFAULT_GAMMA_GRID if gamma_grid is None else tuple(gamma_grid)
    if not w_grid or not gamma_grid:
        raise DataError("tuning grid must be nonempty")
    if not corpus.validation:
        raise DataError("weight tuning requires a nonempty validation set")

    alpha, joint, agree = pairwise_components(rules, corpus.labeled, corpus.unlabeled)
    fm_val = build_firing_matrix(rules, corpus.validation)
    gold = gold_array(corpus.validation)
    position = {rule_id: j for j, rule_id in enumerate(rules.ids)}
    num_classes = max(corpus.num_classes, 1)

    best_pair, best_score = None, -np.inf
    for w in w_grid:
        for gamma in gamma_grid:
            sim = similarity_from_components(alpha, joint, agree, rules.ids, w=w, gamma=gamma)
            ids, _ = select_graph_cut(sim, k, lam=lam, validate=False)
            cols = [position[rid] for rid in ids]
            sub = FiringMatrix(
                entries=fm_val.entries[:, cols],
                instance_ids=fm_val.instance_ids,
                rule_ids=tuple(ids),
            )
            preds = majority_vote(sub)
            score = macro_f1(preds.labels, gold, policy=policy, num_classes=num_classes).macro_f1
            if score > best_score:
                best_pair, best_score = (w, gamma), score
    return best_pair
