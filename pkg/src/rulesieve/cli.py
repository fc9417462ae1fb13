"""Command-line interface.

Subcommands: gen-synthetic, split, induce, stats, filter, aggregate,
evaluate, pipeline. Exit codes: 0 success, 1 usage error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import build_firing_matrix, gold_array
from .errors import DataError, InternalError, PipelineStageError, RuleSieveError
from .evaluation import macro_f1, majority_vote, test_set_precision
from .filtering import (
    DEFAULT_GAMMA,
    DEFAULT_LAMBDA,
    DEFAULT_W,
    GraphCutRuleFilter,
    PrecisionCoverageRuleFilter,
)
from .io import (
    load_corpus,
    read_instances,
    read_rules,
    write_corpus_dir,
    write_instances,
    write_json,
    write_jsonl,
    write_rules,
)
from .pipeline import PipelineConfig, file_sha256, induce_with_metadata, run_pipeline, split_instances
from .stats import make_stats_report
from .synthetic import gen_synthetic, planted_tokens

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _cmd_gen_synthetic(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pool, validation, test = gen_synthetic(
        num_classes=args.classes,
        planted_per_class=args.planted_per_class,
        noise_vocab_size=args.noise_tokens,
        sizes=tuple(args.sizes),
        p_signal=args.p_signal,
        noise_per_instance=args.noise_per_instance,
        seed=args.seed,
    )
    write_instances(out_dir / "pool.jsonl", pool)
    write_instances(out_dir / "validation.jsonl", validation)
    write_instances(out_dir / "test.jsonl", test)
    write_json(
        out_dir / "synthetic_meta.json",
        {
            "classes": args.classes,
            "planted_tokens": {str(c): list(t) for c, t in planted_tokens(args.classes, args.planted_per_class).items()},
            "noise_tokens": args.noise_tokens,
            "sizes": {"pool": len(pool), "validation": len(validation), "test": len(test)},
            "p_signal": args.p_signal,
            "noise_per_instance": args.noise_per_instance,
            "seed": args.seed,
        },
    )
    print(f"wrote pool={len(pool)} validation={len(validation)} test={len(test)} to {out_dir}")
    return EXIT_OK


def _cmd_split(args) -> int:
    instances = read_instances(args.corpus)
    corpus = split_instances(
        instances,
        labeled_frac=args.labeled_frac,
        validation_frac=args.validation_frac,
        test_count=args.test_count,
        seed=args.seed,
    )
    paths = write_corpus_dir(corpus, args.out_dir)
    write_json(
        Path(args.out_dir) / "split_manifest.json",
        {
            "input": {"path": str(args.corpus), "sha256": file_sha256(args.corpus)},
            "seed": args.seed,
            "labeled_frac": args.labeled_frac,
            "validation_frac": args.validation_frac,
            "test_count": args.test_count,
            "sizes": corpus.sizes(),
            "files": paths,
        },
    )
    print(" ".join(f"{name}={size}" for name, size in corpus.sizes().items()))
    return EXIT_OK


def _cmd_induce(args) -> int:
    corpus = load_corpus(args.corpus)
    rules, meta = induce_with_metadata(
        corpus,
        method=args.method,
        ngram_max=args.ngram_max,
        min_support=args.min_support,
        max_candidates=args.max_candidates,
        top_p=args.top_p,
        l2=args.l2,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
    )
    write_rules(args.out, rules)
    meta_path = args.meta or str(args.out) + ".meta.json"
    write_json(meta_path, meta)
    print(f"induced {len(rules)} rules -> {args.out}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    corpus = load_corpus(args.corpus)
    rules = read_rules(args.rules)
    write_json(args.out, make_stats_report(rules, corpus))
    print(f"stats for {len(rules)} rules -> {args.out}")
    return EXIT_OK


def _cmd_filter(args) -> int:
    corpus = load_corpus(args.corpus)
    rules = read_rules(args.rules)
    if args.variant == "gc":
        selector = GraphCutRuleFilter(
            k=args.k, lam=args.lam, w=args.w, gamma=args.gamma, method=args.greedy
        )
    else:
        selector = PrecisionCoverageRuleFilter(
            k=args.k,
            w=args.w,
            gamma=args.gamma,
            coeffs=tuple(args.pca_coeffs) if args.pca_coeffs else None,
        )
    selector.fit(rules, corpus)
    write_rules(args.out_rules, selector.committed_)
    write_json(args.out_trace, selector.trace_.to_dict())
    print(f"committed {len(selector.committed_)} of {len(rules)} rules -> {args.out_rules}")
    return EXIT_OK


def _load_instances_for(args, partition: str):
    path = Path(args.corpus)
    if path.is_dir():
        corpus = load_corpus(path)
        return getattr(corpus, partition)
    return read_instances(path)


def _cmd_aggregate(args) -> int:
    instances = _load_instances_for(args, "unlabeled")
    rules = read_rules(args.rules)
    preds = majority_vote(build_firing_matrix(rules, instances))
    rows = [{"id": iid, "label": int(label)} for iid, label in zip(preds.instance_ids, preds.labels)]
    write_jsonl(args.out, rows)
    print(f"aggregated {len(rows)} instances (coverage {preds.coverage:.4f}) -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    instances = _load_instances_for(args, "test")
    if not instances:
        raise DataError("no instances to evaluate on")
    rules = read_rules(args.rules)
    preds = majority_vote(build_firing_matrix(rules, instances))
    gold = gold_array(instances)
    report = macro_f1(preds.labels, gold, policy=args.policy)
    out = report.to_dict()
    tsp = test_set_precision(rules, instances)
    out["test_rule_micro_precision"] = tsp.value
    out["test_rule_firing_events"] = tsp.firing_events
    write_json(args.out, out)
    if args.csv:
        header = "rules,aggregator,policy,macro_f1,micro_precision,coverage\n"
        row = (
            f"{args.rules},majority_vote,{args.policy},"
            f"{report.macro_f1!r},{report.micro_precision!r},{report.coverage!r}\n"
        )
        csv_path = Path(args.csv)
        new_file = not csv_path.exists()
        with open(csv_path, "a", encoding="utf-8") as handle:
            if new_file:
                handle.write(header)
            handle.write(row)
    print(f"macro_f1={report.macro_f1:.4f} coverage={report.coverage:.4f} -> {args.out}")
    return EXIT_OK


def _read_config_file(path: str) -> dict:
    """Parse a ``key = value`` config file; values are JSON scalars when possible."""
    mapping = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        value = value.strip()
        try:
            mapping[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            mapping[key.strip()] = value
    return mapping


_PIPELINE_OVERRIDES = (
    "corpus",
    "corpus_dir",
    "out_dir",
    "seed",
    "labeled_frac",
    "validation_frac",
    "test_count",
    "method",
    "ngram_max",
    "min_support",
    "max_candidates",
    "top_p",
    "l2",
    "epochs",
    "learning_rate",
    "variant",
    "k",
    "w",
    "gamma",
    "lam",
    "policy",
    "greedy",
    "tune",
)


def _cmd_pipeline(args) -> int:
    mapping = _read_config_file(args.config) if args.config else {}
    for key in _PIPELINE_OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    if args.pca_coeffs:
        mapping["pca_coeffs"] = tuple(args.pca_coeffs)
    config = PipelineConfig.from_mapping(mapping)
    manifest = run_pipeline(config)
    eval_info = manifest.artifacts.get("eval_report", {})
    print(f"pipeline complete: manifest -> {Path(config.out_dir) / 'manifest.json'}")
    if eval_info:
        print(f"eval report -> {eval_info['path']}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="rulesieve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a planted-signal synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--planted-per-class", type=int, default=3)
    p.add_argument("--noise-tokens", type=int, default=20)
    p.add_argument("--sizes", type=int, nargs=3, default=[1000, 1000, 500], metavar=("POOL", "VAL", "TEST"))
    p.add_argument("--p-signal", type=float, default=0.8)
    p.add_argument("--noise-per-instance", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("split", help="split a corpus file into partition files")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--labeled-frac", type=float, default=0.05)
    p.add_argument("--validation-frac", type=float, default=0.05)
    p.add_argument("--test-count", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("induce", help="induce candidate rules from the labeled set")
    p.add_argument("--corpus", required=True, help="partition dir or mixed JSONL file")
    p.add_argument("--method", choices=("stump", "classifier"), default="stump")
    p.add_argument("--ngram-max", type=int, default=2)
    p.add_argument("--min-support", type=int, default=2)
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--top-p", type=int, default=50)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None)
    p.set_defaults(func=_cmd_induce)

    p = sub.add_parser("stats", help="per-rule and set-level quality report")
    p.add_argument("--rules", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("filter", help="select a committed rule subset")
    p.add_argument("--variant", choices=("gc", "pca"), required=True)
    p.add_argument("--rules", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--w", type=float, default=DEFAULT_W)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--pca-coeffs", type=float, nargs=3, default=None, metavar=("PREC", "COV", "AGREE"))
    p.add_argument("--greedy", choices=("naive", "lazy"), default="naive")
    p.add_argument("--out-rules", required=True)
    p.add_argument("--out-trace", required=True)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("aggregate", help="majority-vote weak labels for instances")
    p.add_argument("--rules", required=True)
    p.add_argument("--corpus", required=True, help="instances file, or dir (uses unlabeled)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("evaluate", help="score aggregated labels against gold")
    p.add_argument("--rules", required=True)
    p.add_argument("--corpus", required=True, help="gold instances file, or dir (uses test)")
    p.add_argument("--policy", choices=("abstain_as_wrong", "covered_only"), default="abstain_as_wrong")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None, help="append a flat result row to this CSV")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="run split/induce/stats/filter/aggregate/evaluate")
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    p.add_argument("--corpus", default=None)
    p.add_argument("--corpus-dir", default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--labeled-frac", type=float, default=None)
    p.add_argument("--validation-frac", type=float, default=None)
    p.add_argument("--test-count", type=int, default=None)
    p.add_argument("--method", choices=("stump", "classifier"), default=None)
    p.add_argument("--ngram-max", type=int, default=None)
    p.add_argument("--min-support", type=int, default=None)
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--top-p", type=int, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--variant", choices=("gc", "pca"), default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--w", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--pca-coeffs", type=float, nargs=3, default=None)
    p.add_argument("--policy", choices=("abstain_as_wrong", "covered_only"), default=None)
    p.add_argument("--greedy", choices=("naive", "lazy"), default=None)
    p.add_argument("--tune", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except PipelineStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL if isinstance(exc.cause, InternalError) else EXIT_DATA
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (DataError, RuleSieveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
