"""rulesieve: induce candidate labeling rules from a small labeled corpus and
select a high-quality committed subset by greedy submodular maximization."""

from .corpus import (
    ABSTAIN,
    Corpus,
    FiringMatrix,
    Instance,
    Rule,
    RuleSet,
    apply_rule,
    build_firing_matrix,
    tokenize,
)
from .errors import DataError, InternalError, PipelineStageError, RuleSieveError
from .evaluation import (
    AggregatedLabels,
    EvalReport,
    TestSetPrecision,
    WilcoxonResult,
    macro_f1,
    majority_vote,
    test_set_precision,
    wilcoxon_exact_p,
    wilcoxon_signed_rank,
)
from .filtering import (
    DEFAULT_GAMMA,
    DEFAULT_LAMBDA,
    DEFAULT_W,
    CorpusStatsOracle,
    GraphCutRuleFilter,
    PrecisionCoverageRuleFilter,
    SelectionStep,
    SelectionTrace,
    StatsOracle,
    TableStatsOracle,
    graph_cut_score,
    precision_coverage_score,
    select_graph_cut,
    select_precision_coverage,
    tune_weights,
)
from .induction import (
    ClassifierWeightRuleInducer,
    OneVsRestLogisticRegression,
    StumpRuleInducer,
    featurize,
    induce_classifier_rules,
    induce_stumps,
    ovr_gradient,
    ovr_loss,
    train_linear_classifier,
)
from .io import load_corpus, read_instances, read_rules, serialize_rules, write_instances, write_rules
from .pipeline import PipelineConfig, RunManifest, run_pipeline, split_instances
from .stats import (
    PairStats,
    RuleStats,
    SetStats,
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
from .synthetic import gen_synthetic, planted_tokens

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN",
    "AggregatedLabels",
    "ClassifierWeightRuleInducer",
    "Corpus",
    "CorpusStatsOracle",
    "DEFAULT_GAMMA",
    "DEFAULT_LAMBDA",
    "DEFAULT_W",
    "DataError",
    "EvalReport",
    "FiringMatrix",
    "GraphCutRuleFilter",
    "Instance",
    "InternalError",
    "OneVsRestLogisticRegression",
    "PairStats",
    "PipelineConfig",
    "PipelineStageError",
    "PrecisionCoverageRuleFilter",
    "Rule",
    "RuleSet",
    "RuleSieveError",
    "RuleStats",
    "RunManifest",
    "SelectionStep",
    "SelectionTrace",
    "SetStats",
    "SimilarityMatrix",
    "StatsOracle",
    "StumpRuleInducer",
    "TableStatsOracle",
    "TestSetPrecision",
    "WilcoxonResult",
    "apply_rule",
    "build_firing_matrix",
    "build_similarity_matrix",
    "compute_pair_stats",
    "compute_rule_stats",
    "compute_set_stats",
    "featurize",
    "gen_synthetic",
    "graph_cut_score",
    "induce_classifier_rules",
    "induce_stumps",
    "load_corpus",
    "macro_f1",
    "majority_vote",
    "make_stats_report",
    "ovr_gradient",
    "ovr_loss",
    "pair_agreement",
    "pair_conflict",
    "planted_tokens",
    "precision_coverage_score",
    "read_instances",
    "read_rules",
    "rule_precision",
    "run_pipeline",
    "select_graph_cut",
    "select_precision_coverage",
    "serialize_rules",
    "set_coverage",
    "set_non_conflict",
    "split_instances",
    "test_set_precision",
    "tokenize",
    "train_linear_classifier",
    "tune_weights",
    "wilcoxon_exact_p",
    "wilcoxon_signed_rank",
    "write_instances",
    "write_rules",
]
