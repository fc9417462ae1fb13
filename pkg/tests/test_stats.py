import numpy as np
import pytest

from rulesieve import (
    DataError,
    RuleSet,
    SimilarityMatrix,
    build_similarity_matrix,
    compute_pair_stats,
    compute_rule_stats,
    compute_set_stats,
    make_stats_report,
    pair_agreement,
    pair_conflict,
    rule_precision,
    set_coverage,
    set_non_conflict,
)
from rulesieve.stats import (
    matrix_column_precision,
    matrix_coverage,
    matrix_non_conflict,
    matrix_pair_agreement,
    matrix_pair_conflict,
    matrix_pair_overlap,
)

from conftest import make_corpus, make_instances, random_firing_matrix, rule, ruleset


# --------------------------------------------------------------------------
# brute-force per-instance oracles
# --------------------------------------------------------------------------


def brute_coverage(entries, cols):
    n = entries.shape[0]
    covered = sum(1 for r in range(n) if any(entries[r, c] > 0 for c in cols))
    return covered / n


def brute_pair(entries, i, j):
    n = entries.shape[0]
    agree = sum(1 for r in range(n) if entries[r, i] > 0 and entries[r, j] > 0 and entries[r, i] == entries[r, j])
    diff = sum(1 for r in range(n) if entries[r, i] > 0 and entries[r, j] > 0 and entries[r, i] != entries[r, j])
    both = sum(1 for r in range(n) if entries[r, i] > 0 and entries[r, j] > 0)
    return agree / n, diff / n, both / n


def brute_non_conflict(entries, cols):
    n = entries.shape[0]
    good = 0
    for r in range(n):
        labels = {entries[r, c] for c in cols if entries[r, c] > 0}
        good += len(labels) <= 1
    return good / n


def brute_precision(entries, gold, j):
    fires = [r for r in range(entries.shape[0]) if entries[r, j] > 0]
    if not fires:
        return 0.0
    return sum(1 for r in fires if entries[r, j] == gold[r]) / len(fires)


# --------------------------------------------------------------------------
# rule-level operations
# --------------------------------------------------------------------------


class TestRulePrecision:
    def test_two_of_three_firings_correct(self):
        # 4 labeled instances; the rule fires on the first three, gold 1,1,2
        corpus = make_corpus(labeled=(["spam a", "spam b", "spam c", "clean"], [1, 1, 2, 2]))
        assert rule_precision(rule(0, "spam", 1), corpus.labeled) == 2 / 3

    def test_all_firings_correct(self):
        corpus = make_corpus(labeled=(["spam a", "spam b"], [1, 1]))
        assert rule_precision(rule(0, "spam", 1), corpus.labeled) == 1.0

    def test_never_fires_is_zero_with_flag(self):
        corpus = make_corpus(labeled=(["clean a", "clean b"], [1, 1]))
        assert rule_precision(rule(0, "spam", 1), corpus.labeled) == 0.0
        stats = compute_rule_stats(ruleset((0, "spam", 1)), corpus)
        assert stats[0].no_fire and stats[0].precision == 0.0


class TestSetCoverage:
    def test_empty_set_covers_nothing(self):
        insts = make_instances(["a"] * 5)
        assert set_coverage(RuleSet(()), insts) == 0.0

    def test_union_of_two_rules(self):
        # |U| = 10; rule a fires on 0..3, rule b on 2..5 -> union 6/10
        texts = ["a", "a", "a b", "a b", "b", "b", "x", "x", "x", "x"]
        insts = make_instances(texts)
        assert set_coverage(ruleset((0, "a", 1), (1, "b", 1)), insts) == 0.6

    def test_full_coverage(self):
        insts = make_instances(["a y", "a z", "a"])
        assert set_coverage(ruleset((0, "a", 1)), insts) == 1.0

    def test_empty_instances_error(self):
        with pytest.raises(DataError):
            set_coverage(ruleset((0, "a", 1)), [])

    def test_monotone_under_superset(self, rng):
        for _ in range(50):
            entries = random_firing_matrix(rng, 30, 6, 3)
            cols = list(range(6))
            sub = sorted(rng.choice(6, size=rng.integers(0, 6), replace=False))
            assert matrix_coverage(entries, list(sub)) <= matrix_coverage(entries, cols)


class TestPairwise:
    def test_disjoint_rules_never_agree(self):
        insts = make_instances(["a", "b", "c"])
        assert pair_agreement(rule(0, "a", 1), rule(1, "b", 1), insts) == 0.0

    def test_matrix_level_partial_agreement(self):
        # both fire on 4 rows, same label on 3 of them, |U| = 10
        entries = np.zeros((10, 2), dtype=np.int64)
        entries[0:4, 0] = [1, 1, 1, 2]
        entries[0:4, 1] = [1, 1, 1, 1]
        assert matrix_pair_agreement(entries, 0, 1) == 0.3
        assert matrix_pair_conflict(entries, 0, 1) == 0.1
        assert matrix_pair_overlap(entries, 0, 1) == 0.4

    def test_rule_agrees_with_itself_where_it_fires(self):
        insts = make_instances(["a", "a", "x", "x"])
        r = rule(0, "a", 2)
        assert pair_agreement(r, r, insts) == set_coverage(ruleset((0, "a", 2)), insts) == 0.5
        assert pair_conflict(r, r, insts) == 0.0

    def test_same_label_rules_cannot_conflict(self):
        insts = make_instances(["a b", "a b", "c"])
        assert pair_conflict(rule(0, "a", 1), rule(1, "b", 1), insts) == 0.0

    def test_conflict_is_overlap_minus_agreement(self):
        entries = np.zeros((10, 2), dtype=np.int64)
        entries[0:4, 0] = [1, 1, 1, 2]
        entries[0:4, 1] = [1, 1, 1, 1]
        expected = matrix_pair_overlap(entries, 0, 1) - matrix_pair_agreement(entries, 0, 1)
        assert matrix_pair_conflict(entries, 0, 1) == pytest.approx(expected, abs=1e-12)

    def test_pair_stats_invariants(self, rng):
        for _ in range(30):
            vocab = ["a", "b", "c", "d"]
            texts = [" ".join(rng.choice(vocab, size=rng.integers(0, 4))) for _ in range(20)]
            insts = make_instances(texts)
            ri, rj = rule(0, "a", 1), rule(1, "b", 2)
            ps = compute_pair_stats(ri, rj, insts)
            cov_i = set_coverage(ruleset((0, "a", 1)), insts)
            cov_j = set_coverage(ruleset((1, "b", 2)), insts)
            assert ps.agreement + ps.conflict == pytest.approx(ps.overlap, abs=1e-15)
            assert ps.joint_coverage <= cov_i + cov_j + 1e-15
            assert max(cov_i, cov_j) <= ps.joint_coverage + 1e-15


class TestSetNonConflict:
    def test_singleton_always_non_conflicting(self):
        insts = make_instances(["a", "x", "x", "x", "x", "x", "x", "x", "x", "x"])
        assert set_non_conflict(ruleset((0, "a", 1)), insts) == 1.0

    def test_identical_firing_sets_always_disagreeing(self):
        # two rules fire on the same single instance of ten with different labels
        insts = make_instances(["a"] + ["x"] * 9)
        rules = ruleset((0, "a", 1), (1, "a", 2))
        assert set_coverage(rules, insts) == 0.1
        assert set_non_conflict(rules, insts) == 0.9

    def test_empty_set_vacuous(self):
        assert set_non_conflict(RuleSet(()), make_instances(["a"])) == 1.0

    def test_adding_disagreeing_rule_lowers_it(self):
        insts = make_instances(["a b", "a b", "x"])
        base = ruleset((0, "a", 1))
        extended = ruleset((0, "a", 1), (1, "b", 2))
        assert set_non_conflict(extended, insts) < set_non_conflict(base, insts)

    def test_empty_instances_error(self):
        with pytest.raises(DataError):
            set_non_conflict(ruleset((0, "a", 1)), [])


class TestBruteForceEquivalence:
    def test_all_stats_match_enumeration_exactly(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 50))
            m = int(rng.integers(1, 8))
            num_classes = int(rng.integers(2, 5))
            entries = random_firing_matrix(rng, n, m, num_classes)
            gold = rng.integers(1, num_classes + 1, size=n)
            cols = list(rng.choice(m, size=int(rng.integers(0, m + 1)), replace=False))
            assert matrix_coverage(entries, cols) == brute_coverage(entries, cols)
            assert matrix_non_conflict(entries, cols) == brute_non_conflict(entries, cols)
            for j in range(m):
                assert matrix_column_precision(entries, gold, j) == brute_precision(entries, gold, j)
            for i in range(m):
                for j in range(m):
                    agree, diff, both = brute_pair(entries, i, j)
                    assert matrix_pair_agreement(entries, i, j) == agree
                    assert matrix_pair_conflict(entries, i, j) == diff
                    assert matrix_pair_overlap(entries, i, j) == both
                    # exact on counts; the divided fractions agree to 1e-12
                    assert round(agree * n) + round(diff * n) == round(both * n)
                    assert agree + diff == pytest.approx(both, abs=1e-12)


# --------------------------------------------------------------------------
# similarity matrix
# --------------------------------------------------------------------------


def _similarity_fixture_corpus():
    """Hand-built stats: alpha_a = 0.8, alpha_b = 0.6, joint coverage 0.5,
    agreement 0.2 (same-label rules overlapping on two of ten)."""
    labeled_texts = ["foo"] * 5 + ["bar"] * 5
    labeled_golds = [1, 1, 1, 1, 2] + [1, 1, 1, 2, 2]
    unlabeled = ["foo", "foo", "foo bar", "foo bar", "bar", "x", "x", "x", "x", "x"]
    return make_corpus(labeled=(labeled_texts, labeled_golds), unlabeled=unlabeled)


class TestSimilarityMatrix:
    def test_hand_computed_entry(self):
        corpus = _similarity_fixture_corpus()
        rules = ruleset((0, "foo", 1), (1, "bar", 1))
        sim = build_similarity_matrix(rules, corpus.labeled, corpus.unlabeled, w=3.0, gamma=0.3)
        # 0.8 + 0.6 + 3*0.5 + 0.3*0.2
        assert sim.values[0, 1] == pytest.approx(2.96, abs=1e-12)
        assert sim.values[1, 0] == sim.values[0, 1]
        assert sim.values[0, 0] == 0.0 and sim.values[1, 1] == 0.0

    def test_symmetric_zero_diagonal_nonnegative(self, rng):
        vocab = ["a", "b", "c", "d", "e"]
        labeled = [" ".join(rng.choice(vocab, size=3)) for _ in range(12)]
        golds = list(rng.integers(1, 3, size=12))
        unlabeled = [" ".join(rng.choice(vocab, size=3)) for _ in range(25)]
        corpus = make_corpus(labeled=(labeled, golds), unlabeled=unlabeled)
        rules = ruleset((0, "a", 1), (1, "b", 2), (2, "c", 1), (3, "d", 2))
        sim = build_similarity_matrix(rules, corpus.labeled, corpus.unlabeled)
        assert np.array_equal(sim.values, sim.values.T)
        assert (np.diagonal(sim.values) == 0.0).all()
        assert sim.values.min() >= 0.0

    def test_default_weights_sit_inside_recommended_ranges(self):
        from rulesieve import DEFAULT_GAMMA, DEFAULT_LAMBDA, DEFAULT_W

        assert 2.0 <= DEFAULT_W <= 4.0
        assert 0.2 <= DEFAULT_GAMMA <= 0.5
        assert DEFAULT_LAMBDA == 0.7

    def test_empty_ruleset_rejected(self):
        corpus = _similarity_fixture_corpus()
        with pytest.raises(DataError):
            build_similarity_matrix(RuleSet(()), corpus.labeled, corpus.unlabeled)

    def test_negative_weights_rejected(self):
        corpus = _similarity_fixture_corpus()
        rules = ruleset((0, "foo", 1), (1, "bar", 1))
        with pytest.raises(DataError):
            build_similarity_matrix(rules, corpus.labeled, corpus.unlabeled, w=-1.0)

    def test_validation_rejects_bad_matrices(self):
        with pytest.raises(DataError):
            SimilarityMatrix(values=np.array([[0.0, 1.0], [2.0, 0.0]]), rule_ids=(0, 1))
        with pytest.raises(DataError):
            SimilarityMatrix(values=np.array([[1.0, 2.0], [2.0, 0.0]]), rule_ids=(0, 1))
        with pytest.raises(DataError):
            SimilarityMatrix(values=np.array([[0.0, -2.0], [-2.0, 0.0]]), rule_ids=(0, 1))


class TestReports:
    def test_empty_committed_set_stats_are_vacuous(self):
        corpus = make_corpus(labeled=(["a"], [1]), unlabeled=["b"])
        stats = compute_set_stats(RuleSet(()), corpus)
        assert stats.coverage == 0.0 and stats.non_conflict == 1.0

    def test_set_stats_and_report_shape(self):
        corpus = make_corpus(
            labeled=(["spam x", "spam y", "ham z"], [1, 1, 2]),
            unlabeled=["spam a", "ham b", "c"],
            test=(["spam t", "ham u"], [1, 2]),
        )
        rules = ruleset((0, "spam", 1), (1, "ham", 2))
        stats = compute_set_stats(rules, corpus)
        assert stats.coverage == 2 / 3
        assert stats.non_conflict == 1.0
        assert stats.labeled_coverage == 1.0

        report = make_stats_report(rules, corpus)
        assert {row["id"] for row in report["rules"]} == {0, 1}
        first = report["rules"][0]
        assert {"over_unlabeled", "over_overlap"} <= set(first["mean_agreement"])
        assert report["set"]["test_micro_precision"] == 1.0
        assert {"over_unlabeled", "over_covered"} <= set(report["set"]["non_conflict"])
