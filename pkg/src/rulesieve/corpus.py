"""Core data model: text instances, labeling rules, and firing matrices.

Weak labels are plain integers: class ids run 1..K and 0 (``ABSTAIN``)
means a rule declines to label an instance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError

#: Label value reserved for "rule does not fire on this instance".
ABSTAIN = 0

#: Where a rule came from.
RULE_ORIGINS = ("stump", "classifier_weight", "external")

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase ``text`` and split it on runs of non-alphanumeric characters.

    Empty fragments are dropped, so ``tokenize("")`` is ``()``.
    """
    return tuple(_TOKEN_RE.findall(text.lower()))


@dataclass(frozen=True)
class Instance:
    """One text item. ``gold`` is the true class (1..K) or None if unknown."""

    id: int
    text: str
    gold: int | None = None

    def __post_init__(self):
        if self.gold is not None and self.gold < 1:
            raise DataError(f"instance {self.id}: gold label must be >= 1, got {self.gold}")

    @cached_property
    def tokens(self) -> tuple[str, ...]:
        return tokenize(self.text)


@dataclass(frozen=True)
class Rule:
    """A pattern/label pair. Fires with ``label`` where the pattern matches,
    abstains everywhere else."""

    id: int
    pattern: tuple[str, ...]
    label: int
    origin: str = "external"

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(self.pattern))
        if len(self.pattern) == 0:
            raise DataError(f"rule {self.id}: empty pattern")
        if self.label < 1:
            raise DataError(f"rule {self.id}: label must be 1..K, got {self.label}")
        if self.origin not in RULE_ORIGINS:
            raise DataError(f"rule {self.id}: unknown origin {self.origin!r}")


@dataclass(frozen=True)
class RuleSet:
    """An ordered collection of rules with unique ids."""

    rules: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate rule ids in rule set")

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __getitem__(self, index: int) -> Rule:
        return self.rules[index]

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.rules)

    def by_id(self, rule_id: int) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    def subset(self, ids: Sequence[int]) -> "RuleSet":
        """Sub-ruleset in the order of ``ids``."""
        lookup = {r.id: r for r in self.rules}
        try:
            return RuleSet(tuple(lookup[i] for i in ids))
        except KeyError as exc:
            raise DataError(f"unknown rule id {exc.args[0]}") from exc


@dataclass(frozen=True)
class Corpus:
    """Disjoint instance partitions.

    ``labeled``, ``validation`` and ``test`` instances must carry gold labels;
    ``unlabeled`` instances must not (the split step strips them).
    """

    labeled: tuple[Instance, ...] = ()
    unlabeled: tuple[Instance, ...] = ()
    validation: tuple[Instance, ...] = ()
    test: tuple[Instance, ...] = ()

    def __post_init__(self):
        for name in ("labeled", "unlabeled", "validation", "test"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("labeled", "validation", "test"):
            for inst in getattr(self, name):
                if inst.gold is None:
                    raise DataError(f"{name} instance {inst.id} has no gold label")
        for inst in self.unlabeled:
            if inst.gold is not None:
                raise DataError(f"unlabeled instance {inst.id} carries a gold label")
        ids = [i.id for part in (self.labeled, self.unlabeled, self.validation, self.test) for i in part]
        if len(set(ids)) != len(ids):
            raise DataError("instance ids are not unique across partitions")

    @property
    def num_classes(self) -> int:
        """Largest gold label seen in any gold-bearing partition (0 if none)."""
        golds = [i.gold for part in (self.labeled, self.validation, self.test) for i in part]
        return max(golds, default=0)

    def sizes(self) -> dict[str, int]:
        return {
            "labeled": len(self.labeled),
            "unlabeled": len(self.unlabeled),
            "validation": len(self.validation),
            "test": len(self.test),
        }


@dataclass(frozen=True)
class FiringMatrix:
    """Dense weak-label matrix: rows are instances, columns are rules.

    ``entries[i, j]`` is the label rule j assigns to instance i (0 = abstain).
    """

    entries: np.ndarray
    instance_ids: tuple[int, ...]
    rule_ids: tuple[int, ...]

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int64)
        if entries.ndim != 2:
            raise DataError("firing matrix must be 2-dimensional")
        if entries.shape != (len(self.instance_ids), len(self.rule_ids)):
            raise DataError("firing matrix shape does not match id lists")
        if entries.size and entries.min() < 0:
            raise DataError("firing matrix entries must be >= 0")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        object.__setattr__(self, "rule_ids", tuple(self.rule_ids))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def _matches(tokens: tuple[str, ...], pattern: tuple[str, ...]) -> bool:
    width = len(pattern)
    if width == 1:
        return pattern[0] in tokens
    return any(tokens[i : i + width] == pattern for i in range(len(tokens) - width + 1))


def apply_rule(rule: Rule, instance: Instance) -> int:
    """Weak label of ``instance`` under ``rule``: the rule's label if its
    pattern occurs as a contiguous token run, else ``ABSTAIN``."""
    return rule.label if _matches(instance.tokens, rule.pattern) else ABSTAIN


def build_firing_matrix(rules: RuleSet, instances: Sequence[Instance]) -> FiringMatrix:
    """Evaluate every rule on every instance.

    Column j is exactly ``apply_rule(rules[j], .)`` mapped over the rows.
    """
    instance_ids = [inst.id for inst in instances]
    if len(set(instance_ids)) != len(instance_ids):
        raise DataError("duplicate instance ids")
    entries = np.zeros((len(instances), len(rules)), dtype=np.int64)
    # Unigram rules dominate in practice; a per-instance token set makes them O(1).
    token_sets = [frozenset(inst.tokens) for inst in instances]
    for j, rule in enumerate(rules):
        if len(rule.pattern) == 1:
            token = rule.pattern[0]
            hits = [token in toks for toks in token_sets]
        else:
            hits = [_matches(inst.tokens, rule.pattern) for inst in instances]
        entries[np.asarray(hits, dtype=bool), j] = rule.label
    return FiringMatrix(entries=entries, instance_ids=tuple(instance_ids), rule_ids=rules.ids)


def gold_array(instances: Sequence[Instance]) -> np.ndarray:
    """Gold labels as an int array; raises if any instance lacks one."""
    golds = []
    for inst in instances:
        if inst.gold is None:
            raise DataError(f"instance {inst.id} has no gold label")
        golds.append(inst.gold)
    return np.asarray(golds, dtype=np.int64)
