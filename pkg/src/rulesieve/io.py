"""JSON Lines serialization for corpora and rule sets.

Corpus rows look like ``{"id": 3, "text": "...", "label": 2}`` with
``label: null`` marking an unlabeled instance. Rule rows look like
``{"id": 0, "pattern": ["new", "york"], "label": 1, "origin": "stump"}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus, Instance, Rule, RuleSet
from .errors import DataError

#: File names used for an on-disk corpus directory.
PARTITION_FILES = {
    "labeled": "labeled.jsonl",
    "unlabeled": "unlabeled.jsonl",
    "validation": "validation.jsonl",
    "test": "test.jsonl",
}


def _dump_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _iter_jsonl(path: Path):
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def read_instances(path: str | Path) -> list[Instance]:
    path = Path(path)
    instances = []
    for lineno, row in _iter_jsonl(path):
        try:
            instances.append(Instance(id=int(row["id"]), text=str(row["text"]), gold=row.get("label")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad instance row ({exc})") from exc
    return instances


def write_instances(path: str | Path, instances: Iterable[Instance], *, strip_gold: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            label = None if strip_gold else inst.gold
            handle.write(_dump_line({"id": inst.id, "text": inst.text, "label": label}) + "\n")


def read_rules(path: str | Path) -> RuleSet:
    path = Path(path)
    rules = []
    for lineno, row in _iter_jsonl(path):
        try:
            rules.append(
                Rule(
                    id=int(row["id"]),
                    pattern=tuple(str(t) for t in row["pattern"]),
                    label=int(row["label"]),
                    origin=str(row.get("origin", "external")),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad rule row ({exc})") from exc
    return RuleSet(tuple(rules))


def serialize_rules(rules: RuleSet) -> str:
    """Canonical JSONL text for a rule set (used for byte-equality checks)."""
    lines = [
        _dump_line({"id": r.id, "pattern": list(r.pattern), "label": r.label, "origin": r.origin})
        for r in rules
    ]
    return "".join(line + "\n" for line in lines)


def write_rules(path: str | Path, rules: RuleSet) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_rules(rules))


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus from a partition directory or a single mixed file.

    A directory must contain the :data:`PARTITION_FILES` (missing files are
    treated as empty partitions). A single JSONL file is split by gold
    presence: rows with a label become the labeled set, the rest unlabeled.
    """
    path = Path(path)
    if path.is_dir():
        parts = {}
        for name, filename in PARTITION_FILES.items():
            file = path / filename
            parts[name] = tuple(read_instances(file)) if file.exists() else ()
        return Corpus(**parts)
    instances = read_instances(path)
    labeled = tuple(i for i in instances if i.gold is not None)
    unlabeled = tuple(i for i in instances if i.gold is None)
    return Corpus(labeled=labeled, unlabeled=unlabeled)


def write_corpus_dir(corpus: Corpus, out_dir: str | Path) -> dict[str, str]:
    """Write the four partition files; gold is never written for unlabeled."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, filename in PARTITION_FILES.items():
        target = out_dir / filename
        write_instances(target, getattr(corpus, name), strip_gold=(name == "unlabeled"))
        paths[name] = str(target)
    return paths


def write_jsonl(path: str | Path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(_dump_line(row) + "\n")


def write_json(path: str | Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, sort_keys=True, indent=2)
        handle.write("\n")
