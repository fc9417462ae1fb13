"""End-to-end orchestration: split, induce, stats, filter, aggregate, evaluate.

Every run writes a manifest recording the configuration, input hashes and
per-artifact SHA-256 digests; re-running with the same inputs and seed must
reproduce identical artifact bytes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus, Instance, RuleSet, build_firing_matrix, gold_array
from .errors import DataError, PipelineStageError
from .evaluation import macro_f1, majority_vote, test_set_precision
from .filtering import (
    DEFAULT_GAMMA,
    DEFAULT_LAMBDA,
    DEFAULT_W,
    GraphCutRuleFilter,
    PrecisionCoverageRuleFilter,
    tune_weights,
)
from .induction import ClassifierWeightRuleInducer, StumpRuleInducer
from .io import load_corpus, read_instances, write_corpus_dir, write_json, write_jsonl, write_rules
from .stats import compute_rule_stats, make_stats_report


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# corpus splitting
# ---------------------------------------------------------------------------


def split_instances(
    instances: Sequence[Instance],
    labeled_frac: float = 0.05,
    validation_frac: float = 0.05,
    test_count: int = 500,
    seed: int = 0,
) -> Corpus:
    """Partition a corpus by seeded shuffle.

    Quotas are filled in shuffled order, labeled first, then validation,
    then test; only gold-carrying instances are eligible for those three.
    Everything left over becomes the unlabeled set with gold stripped.
    """
    if labeled_frac < 0 or validation_frac < 0 or labeled_frac + validation_frac > 1:
        raise DataError("split fractions must be nonnegative and sum to at most 1")
    if test_count < 0:
        raise DataError("test_count must be >= 0")
    total = len(instances)
    quotas = {
        "labeled": int(labeled_frac * total + 1e-9),
        "validation": int(validation_frac * total + 1e-9),
        "test": min(test_count, total),
    }
    rng = np.random.default_rng(seed)
    order = rng.permutation(total)

    parts: dict[str, list[Instance]] = {"labeled": [], "validation": [], "test": [], "unlabeled": []}
    for idx in order:
        inst = instances[int(idx)]
        placed = False
        if inst.gold is not None:
            for name in ("labeled", "validation", "test"):
                if len(parts[name]) < quotas[name]:
                    parts[name].append(inst)
                    placed = True
                    break
        if not placed:
            parts["unlabeled"].append(dataclasses.replace(inst, gold=None))

    for name in ("labeled", "validation", "test"):
        if len(parts[name]) < quotas[name]:
            raise DataError(
                f"not enough gold-labeled instances: {name} quota is {quotas[name]}, "
                f"got {len(parts[name])}"
            )
    return Corpus(
        labeled=tuple(parts["labeled"]),
        unlabeled=tuple(parts["unlabeled"]),
        validation=tuple(parts["validation"]),
        test=tuple(parts["test"]),
    )


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """Everything a run needs; exactly one of ``corpus``/``corpus_dir`` is set.

    A single ``corpus`` file triggers the split stage with the fractions
    below; a ``corpus_dir`` is used as-is.
    """

    corpus: str | None = None
    corpus_dir: str | None = None
    out_dir: str = "run"
    seed: int = 0
    labeled_frac: float = 0.05
    validation_frac: float = 0.05
    test_count: int = 500
    method: str = "stump"  # stump | classifier
    ngram_max: int = 2
    min_support: int = 2
    max_candidates: int | None = None
    top_p: int = 50
    l2: float = 1e-3
    epochs: int = 500
    learning_rate: float = 0.5
    variant: str = "gc"  # gc | pca
    k: int = 10
    w: float = DEFAULT_W
    gamma: float = DEFAULT_GAMMA
    lam: float = DEFAULT_LAMBDA
    pca_coeffs: tuple[float, float, float] | None = None
    policy: str = "abstain_as_wrong"
    greedy: str = "naive"  # naive | lazy
    tune: bool = False

    def validate(self) -> None:
        if (self.corpus is None) == (self.corpus_dir is None):
            raise DataError("exactly one of 'corpus' and 'corpus_dir' must be given")
        if self.method not in ("stump", "classifier"):
            raise DataError(f"unknown induction method {self.method!r}")
        if self.variant not in ("gc", "pca"):
            raise DataError(f"unknown filter variant {self.variant!r}")
        if self.tune and self.variant != "gc":
            raise DataError("weight tuning applies to the gc variant only")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if out["pca_coeffs"] is not None:
            out["pca_coeffs"] = list(out["pca_coeffs"])
        return out

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PipelineConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            key = key.replace("-", "_")
            if key not in fields:
                raise DataError(f"unknown config key {key!r}")
            if key == "pca_coeffs" and value is not None:
                value = tuple(float(v) for v in value)
            kwargs[key] = value
        return cls(**kwargs)


@dataclass
class RunManifest:
    """Reproducibility record: config, input hashes, artifact hashes, timings."""

    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    sizes: dict[str, int] = field(default_factory=dict)
    artifacts: dict[str, dict] = field(default_factory=dict)
    stages: list[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add_artifact(self, name: str, path: str | Path) -> None:
        self.artifacts[name] = {"path": str(path), "sha256": file_sha256(path)}

    def artifact_hashes(self) -> dict[str, str]:
        return {name: info["sha256"] for name, info in self.artifacts.items()}

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "inputs": self.inputs,
            "sizes": self.sizes,
            "artifacts": self.artifacts,
            "stages": self.stages,
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


class _StageTimer:
    def __init__(self, manifest: RunManifest):
        self.manifest = manifest

    def run(self, name: str, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc
        self.manifest.stages.append({"name": name, "seconds": time.perf_counter() - start})
        return result


def induce_with_metadata(
    corpus: Corpus,
    method: str = "stump",
    ngram_max: int = 2,
    min_support: int = 2,
    max_candidates: int | None = None,
    top_p: int = 50,
    l2: float = 1e-3,
    epochs: int = 500,
    learning_rate: float = 0.5,
) -> tuple[RuleSet, dict]:
    """Induce candidate rules plus the sidecar metadata written next to them."""
    docs = [inst.tokens for inst in corpus.labeled]
    if not docs:
        raise DataError("corpus has no labeled instances to induce from")
    y = gold_array(corpus.labeled)
    if method == "stump":
        inducer = StumpRuleInducer(ngram_max=ngram_max, min_support=min_support, max_candidates=max_candidates)
        inducer.fit(docs, y)
        meta = {
            "method": "stump",
            "num_ngrams_considered": inducer.num_candidates_,
            "rules": [
                {
                    "id": rule.id,
                    "pattern": list(rule.pattern),
                    "label": rule.label,
                    "precision_labeled": float(inducer.rule_precisions_[j]),
                    "support_labeled": int(inducer.rule_supports_[j]),
                }
                for j, rule in enumerate(inducer.rules_)
            ],
        }
        return inducer.rules_, meta
    if method != "classifier":
        raise DataError(f"unknown induction method {method!r}")
    inducer = ClassifierWeightRuleInducer(top_p=top_p, l2=l2, epochs=epochs, learning_rate=learning_rate)
    inducer.fit(docs, y)
    per_rule = compute_rule_stats(inducer.rules_, Corpus(labeled=corpus.labeled))
    meta = {
        "method": "classifier",
        "vocab_size": len(inducer.vocab_),
        "rules": [
            {
                "id": rule.id,
                "pattern": list(rule.pattern),
                "label": rule.label,
                "weight": float(inducer.rule_weights_[j]),
                "precision_labeled": per_rule[j].precision,
                "support_labeled": per_rule[j].fires_labeled,
            }
            for j, rule in enumerate(inducer.rules_)
        ],
    }
    return inducer.rules_, meta


def _evaluate(config: PipelineConfig, rules: RuleSet, corpus: Corpus) -> dict:
    if not corpus.test:
        raise DataError("pipeline evaluation requires a nonempty test partition")
    fm = build_firing_matrix(rules, corpus.test)
    preds = majority_vote(fm)
    gold = gold_array(corpus.test)
    report = macro_f1(preds.labels, gold, policy=config.policy, num_classes=corpus.num_classes)
    tsp = test_set_precision(rules, corpus.test)
    out = report.to_dict()
    out["test_rule_micro_precision"] = tsp.value
    out["test_rule_firing_events"] = tsp.firing_events
    return out


_CSV_COLUMNS = (
    "variant",
    "aggregator",
    "policy",
    "k",
    "w",
    "gamma",
    "lam",
    "macro_f1",
    "micro_precision",
    "coverage",
    "test_rule_micro_precision",
)


def _csv_text(config: PipelineConfig, eval_report: dict, w: float, gamma: float) -> str:
    values = {
        "variant": config.variant,
        "aggregator": "majority_vote",
        "policy": config.policy,
        "k": config.k,
        "w": w,
        "gamma": gamma,
        "lam": config.lam,
        "macro_f1": eval_report["macro_f1"],
        "micro_precision": eval_report["micro_precision"],
        "coverage": eval_report["coverage"],
        "test_rule_micro_precision": eval_report["test_rule_micro_precision"],
    }
    row = ",".join(repr(values[c]) if isinstance(values[c], float) else str(values[c]) for c in _CSV_COLUMNS)
    return ",".join(_CSV_COLUMNS) + "\n" + row + "\n"


def run_pipeline(config: PipelineConfig) -> RunManifest:
    """Run every stage and return the manifest (also written to the out dir)."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=config.to_dict())
    timer = _StageTimer(manifest)

    def load() -> Corpus:
        if config.corpus is not None:
            manifest.inputs[config.corpus] = file_sha256(config.corpus)
            instances = read_instances(config.corpus)
            corpus = split_instances(
                instances,
                labeled_frac=config.labeled_frac,
                validation_frac=config.validation_frac,
                test_count=config.test_count,
                seed=config.seed,
            )
            part_dir = out_dir / "partitions"
            paths = write_corpus_dir(corpus, part_dir)
            for name, path in paths.items():
                manifest.add_artifact(f"partition_{name}", path)
            return corpus
        corpus = load_corpus(config.corpus_dir)
        for name in ("labeled", "unlabeled", "validation", "test"):
            path = Path(config.corpus_dir) / f"{name}.jsonl"
            if path.exists():
                manifest.inputs[str(path)] = file_sha256(path)
        return corpus

    corpus = timer.run("split" if config.corpus is not None else "load", load)
    manifest.sizes = corpus.sizes()

    def induce():
        rules, meta = induce_with_metadata(
            corpus,
            method=config.method,
            ngram_max=config.ngram_max,
            min_support=config.min_support,
            max_candidates=config.max_candidates,
            top_p=config.top_p,
            l2=config.l2,
            epochs=config.epochs,
            learning_rate=config.learning_rate,
        )
        rules_path = out_dir / "candidate_rules.jsonl"
        write_rules(rules_path, rules)
        write_json(out_dir / "candidate_rules.meta.json", meta)
        manifest.add_artifact("candidate_rules", rules_path)
        manifest.add_artifact("candidate_rules_meta", out_dir / "candidate_rules.meta.json")
        return rules

    candidates = timer.run("induce", induce)

    def candidate_stats():
        path = out_dir / "candidate_stats.json"
        write_json(path, make_stats_report(candidates, corpus))
        manifest.add_artifact("candidate_stats", path)

    timer.run("stats", candidate_stats)

    w, gamma = config.w, config.gamma
    if config.tune:
        def tune():
            return tune_weights(candidates, corpus, k=config.k, lam=config.lam, policy=config.policy)

        w, gamma = timer.run("tune", tune)
        manifest.notes["tuned_w"] = w
        manifest.notes["tuned_gamma"] = gamma

    def filter_rules():
        if config.variant == "gc":
            selector = GraphCutRuleFilter(
                k=config.k, lam=config.lam, w=w, gamma=gamma, method=config.greedy
            )
        else:
            selector = PrecisionCoverageRuleFilter(
                k=config.k, w=w, gamma=gamma, coeffs=config.pca_coeffs
            )
        selector.fit(candidates, corpus)
        rules_path = out_dir / "committed_rules.jsonl"
        write_rules(rules_path, selector.committed_)
        write_json(out_dir / "selection_trace.json", selector.trace_.to_dict())
        write_json(out_dir / "committed_stats.json", make_stats_report(selector.committed_, corpus))
        manifest.add_artifact("committed_rules", rules_path)
        manifest.add_artifact("selection_trace", out_dir / "selection_trace.json")
        manifest.add_artifact("committed_stats", out_dir / "committed_stats.json")
        return selector.committed_

    committed = timer.run("filter", filter_rules)

    def aggregate():
        preds_path = out_dir / "predictions_unlabeled.jsonl"
        if corpus.unlabeled:
            preds = majority_vote(build_firing_matrix(committed, corpus.unlabeled))
            rows = [
                {"id": iid, "label": int(label)}
                for iid, label in zip(preds.instance_ids, preds.labels)
            ]
            manifest.notes["unlabeled_vote_coverage"] = preds.coverage
        else:
            rows = []
        write_jsonl(preds_path, rows)
        manifest.add_artifact("predictions_unlabeled", preds_path)

    timer.run("aggregate", aggregate)

    def evaluate():
        report = _evaluate(config, committed, corpus)
        report_path = out_dir / "eval_report.json"
        write_json(report_path, report)
        csv_path = out_dir / "eval_row.csv"
        csv_path.write_text(_csv_text(config, report, w, gamma), encoding="utf-8")
        manifest.add_artifact("eval_report", report_path)
        manifest.add_artifact("eval_row", csv_path)

    timer.run("evaluate", evaluate)

    write_json(out_dir / "manifest.json", manifest.to_dict())
    return manifest
