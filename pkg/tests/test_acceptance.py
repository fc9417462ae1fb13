"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines. Tolerances and runtime budgets are pinned in each test.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

from rulesieve import (
    Corpus,
    GraphCutRuleFilter,
    PipelineConfig,
    SimilarityMatrix,
    StumpRuleInducer,
    TableStatsOracle,
    build_firing_matrix,
    graph_cut_score,
    macro_f1,
    majority_vote,
    precision_coverage_score,
    run_pipeline,
    select_graph_cut,
    split_instances,
    wilcoxon_exact_p,
    wilcoxon_signed_rank,
    write_instances,
)
from rulesieve.corpus import gold_array
from rulesieve.stats import (
    matrix_column_precision,
    matrix_coverage,
    matrix_non_conflict,
    matrix_pair_agreement,
    matrix_pair_conflict,
    matrix_pair_overlap,
)
from rulesieve.synthetic import gen_synthetic, planted_tokens


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"[criterion {number}] FAIL {description}")
        raise
    print(f"[criterion {number}] PASS {description}")


def random_similarity(rng, m, scale=1.0):
    raw = rng.random((m, m)) * scale
    values = np.triu(raw, 1)
    values = values + values.T
    return SimilarityMatrix(values=values, rule_ids=tuple(range(m)))


def test_criterion_01_precision_coverage_objective_not_submodular():
    with criterion(1, "precision/coverage objective violates diminishing returns on the 3-rule counterexample"):
        start = time.perf_counter()
        subsets = [(1,), (2,), (3,), (1, 2), (1, 3), (1, 2, 3)]
        oracle = TableStatsOracle(
            precisions={1: 1.0, 2: 1.0, 3: 0.5},
            coverages={s: 0.1 for s in subsets},
            non_conflicts={(1,): 1.0, (2,): 1.0, (3,): 1.0, (1, 2): 0.5, (1, 3): 0.5, (1, 2, 3): 0.5},
        )
        marginal_small = precision_coverage_score([1, 3], oracle) - precision_coverage_score([1], oracle)
        marginal_large = precision_coverage_score([1, 2, 3], oracle) - precision_coverage_score([1, 2], oracle)
        assert marginal_small == pytest.approx(-0.75, abs=1e-9)
        assert marginal_large == pytest.approx(-1.0 / 6.0, abs=1e-9)
        assert marginal_small < marginal_large
        assert time.perf_counter() - start < 1.0


def test_criterion_02_graph_cut_objective_is_submodular():
    with criterion(2, "graph-cut objective shows diminishing returns on 1000 random instances"):
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        lambdas = [0.0, 0.3, 0.5, 0.7, 1.0]
        for trial in range(1000):
            m = int(rng.integers(2, 11))
            sim = random_similarity(rng, m, scale=2.0)
            lam = lambdas[trial % len(lambdas)]
            j = int(rng.integers(0, m))
            others = [i for i in range(m) if i != j]
            b = sorted(rng.choice(others, size=int(rng.integers(1, len(others) + 1)), replace=False))
            a = sorted(rng.choice(b, size=int(rng.integers(0, len(b))), replace=False))
            gain_small = graph_cut_score(sim, a + [j], lam=lam) - graph_cut_score(sim, a, lam=lam)
            gain_large = graph_cut_score(sim, b + [j], lam=lam) - graph_cut_score(sim, b, lam=lam)
            assert gain_small >= gain_large - 1e-9
        assert time.perf_counter() - start < 10.0


def test_criterion_03_non_monotone_at_lambda_07():
    with criterion(3, "two-rule witness: adding a rule strictly decreases the objective at lam=0.7"):
        sim = SimilarityMatrix(values=np.array([[0.0, 1.0], [1.0, 0.0]]), rule_ids=(1, 2))
        f_single = graph_cut_score(sim, [1], lam=0.7)
        f_pair = graph_cut_score(sim, [1, 2], lam=0.7)
        assert f_single == 1.0
        assert f_pair == pytest.approx(0.6, abs=1e-12)
        assert f_pair < f_single


def test_criterion_04_greedy_optimal_in_modular_regime():
    with criterion(4, "greedy equals exhaustive optimum exactly at lam=0 on 200 random instances"):
        start = time.perf_counter()
        rng = np.random.default_rng(404)
        for _ in range(200):
            m = int(rng.integers(2, 13))
            k = int(rng.integers(1, min(4, m) + 1))
            sim = random_similarity(rng, m)
            ids, _ = select_graph_cut(sim, k=k, lam=0.0)
            greedy_value = graph_cut_score(sim, ids, lam=0.0)
            best = max(
                graph_cut_score(sim, list(subset), lam=0.0)
                for subset in itertools.combinations(range(m), k)
            )
            assert greedy_value == best
        assert time.perf_counter() - start < 30.0


def test_criterion_05_greedy_internal_consistency():
    with criterion(5, "incremental marginals match from-scratch values; lazy greedy matches naive"):
        rng = np.random.default_rng(505)
        for _ in range(50):
            m = int(rng.integers(2, 14))
            k = int(rng.integers(0, m + 1))
            lam = float(rng.choice([0.0, 0.3, 0.5, 0.7, 1.0]))
            sim = random_similarity(rng, m, scale=3.0)
            # validate=True re-checks every accepted marginal internally
            naive_ids, naive_trace = select_graph_cut(sim, k=k, lam=lam, method="naive", validate=True)
            lazy_ids, lazy_trace = select_graph_cut(sim, k=k, lam=lam, method="lazy", validate=True)
            assert naive_ids == lazy_ids
            assert [s.gain for s in naive_trace.steps] == [s.gain for s in lazy_trace.steps]
            for depth, step in enumerate(naive_trace.steps, start=1):
                scratch = graph_cut_score(sim, naive_ids[:depth], lam=lam)
                scratch_gain = scratch - graph_cut_score(sim, naive_ids[: depth - 1], lam=lam)
                assert abs(step.gain - scratch_gain) <= 1e-9
                assert abs(step.objective - scratch) <= 1e-9


def test_criterion_06_stats_match_brute_force_enumeration():
    with criterion(6, "coverage/precision/agreement/conflict/non-conflict match enumeration on 100 random matrices"):
        rng = np.random.default_rng(606)
        for _ in range(100):
            n = int(rng.integers(1, 51))
            m = int(rng.integers(1, 9))
            num_classes = int(rng.integers(2, 5))
            entries = rng.integers(0, num_classes + 1, size=(n, m)).astype(np.int64)
            gold = rng.integers(1, num_classes + 1, size=n)
            cols = list(rng.choice(m, size=int(rng.integers(0, m + 1)), replace=False))

            covered = sum(1 for r in range(n) if any(entries[r, c] > 0 for c in cols))
            assert matrix_coverage(entries, cols) == covered / n

            good = sum(1 for r in range(n) if len({entries[r, c] for c in cols if entries[r, c] > 0}) <= 1)
            assert matrix_non_conflict(entries, cols) == good / n

            for j in range(m):
                fires = [r for r in range(n) if entries[r, j] > 0]
                expected = (sum(1 for r in fires if entries[r, j] == gold[r]) / len(fires)) if fires else 0.0
                assert matrix_column_precision(entries, gold, j) == expected

            for i in range(m):
                for j in range(m):
                    agree = sum(
                        1 for r in range(n)
                        if entries[r, i] > 0 and entries[r, j] > 0 and entries[r, i] == entries[r, j]
                    )
                    diff = sum(
                        1 for r in range(n)
                        if entries[r, i] > 0 and entries[r, j] > 0 and entries[r, i] != entries[r, j]
                    )
                    both = sum(1 for r in range(n) if entries[r, i] > 0 and entries[r, j] > 0)
                    assert matrix_pair_agreement(entries, i, j) == agree / n
                    assert matrix_pair_conflict(entries, i, j) == diff / n
                    assert matrix_pair_overlap(entries, i, j) == both / n
                    assert agree + diff == both


def test_criterion_07_end_to_end_planted_recovery():
    with criterion(7, "planted synthetic: stump induction + graph-cut selection recovers the signal rules"):
        start = time.perf_counter()
        pool, _, test = gen_synthetic(
            num_classes=2,
            planted_per_class=3,
            noise_vocab_size=20,
            sizes=(1000, 0, 500),
            p_signal=0.8,
            noise_per_instance=3,
            seed=42,
        )
        split = split_instances(pool, labeled_frac=0.05, validation_frac=0.0, test_count=0, seed=42)
        corpus = Corpus(labeled=split.labeled, unlabeled=split.unlabeled, test=tuple(test))

        inducer = StumpRuleInducer(ngram_max=2, min_support=2, max_candidates=50)
        inducer.fit([i.tokens for i in corpus.labeled], gold_array(corpus.labeled))
        selector = GraphCutRuleFilter(k=6, lam=0.7, w=3.0, gamma=0.3).fit(inducer.rules_, corpus)

        planted = {tok for toks in planted_tokens(2, 3).values() for tok in toks}
        recovered = sum(
            1 for r in selector.committed_ if len(r.pattern) == 1 and r.pattern[0] in planted
        )
        assert recovered >= 5

        preds = majority_vote(build_firing_matrix(selector.committed_, corpus.test))
        report = macro_f1(preds.labels, gold_array(corpus.test), policy="abstain_as_wrong")
        assert report.macro_f1 >= 0.90
        assert time.perf_counter() - start < 60.0


def test_criterion_08_wilcoxon_matches_hand_ranked_oracle():
    with criterion(8, "signed-rank test matches the hand-ranked oracle; exact and normal p agree at n=12"):
        before = [125.0, 115.0, 130.0, 140.0, 140.0, 115.0, 140.0, 125.0, 140.0, 135.0]
        after = [110.0, 122.0, 125.0, 120.0, 140.0, 124.0, 123.0, 137.0, 135.0, 145.0]
        # hand ranking: |diffs| (15,7,5,20,9,17,12,5,10) -> ranks (7,3,1.5,9,4,8,6,1.5,5)
        res = wilcoxon_signed_rank(before, after)
        assert res.statistic == pytest.approx(18.0, abs=1e-6)
        assert res.z == pytest.approx(4.5 / np.sqrt(71.25), abs=1e-6)
        assert res.p_value == pytest.approx(0.5939546753269146, abs=1e-6)

        gen = np.random.default_rng(5)
        x = gen.normal(loc=0.6, size=12)
        y = gen.normal(size=12)
        assert abs(wilcoxon_signed_rank(x, y).p_value - wilcoxon_exact_p(x, y)) < 0.02


def test_criterion_09_pipeline_determinism(tmp_path):
    with criterion(9, "pipeline rerun under a fixed seed reproduces byte-identical artifacts"):
        pool, _, _ = gen_synthetic(sizes=(400, 0, 0), seed=99)
        corpus_path = tmp_path / "corpus.jsonl"
        write_instances(corpus_path, pool)
        hashes = []
        for name in ("first", "second"):
            config = PipelineConfig(
                corpus=str(corpus_path),
                out_dir=str(tmp_path / name),
                seed=21,
                labeled_frac=0.1,
                validation_frac=0.0,
                test_count=80,
                k=6,
                max_candidates=40,
            )
            hashes.append(run_pipeline(config).artifact_hashes())
        assert hashes[0] == hashes[1]
        assert len(hashes[0]) >= len(
            {"candidate_rules", "committed_rules", "selection_trace", "eval_report", "eval_row"}
        )
