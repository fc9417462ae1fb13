"""Deterministic synthetic corpus generation for end-to-end checks.

Each instance belongs to one class and contains that class's planted signal
tokens independently with probability ``p_signal``, plus a few tokens drawn
uniformly from a shared noise vocabulary. Planted tokens never cross
classes, so a perfect rule set is known by construction.
"""

from __future__ import annotations

import numpy as np

from .corpus import Instance
from .errors import DataError


def planted_tokens(num_classes: int, planted_per_class: int) -> dict[int, tuple[str, ...]]:
    """The signal vocabulary: class c owns tokens ``sig{c}x0 .. sig{c}x{n-1}``."""
    return {
        c: tuple(f"sig{c}x{i}" for i in range(planted_per_class))
        for c in range(1, num_classes + 1)
    }


def gen_synthetic(
    num_classes: int = 2,
    planted_per_class: int = 3,
    noise_vocab_size: int = 20,
    sizes: tuple[int, int, int] = (1000, 1000, 500),
    p_signal: float = 0.8,
    noise_per_instance: int = 3,
    seed: int = 0,
) -> tuple[list[Instance], list[Instance], list[Instance]]:
    """Generate (pool, validation, test) instance lists of the given sizes.

    All instances carry gold labels; the split step decides which pool
    instances keep them. Token order within an instance is shuffled so no
    accidental n-gram structure survives.
    """
    if num_classes < 2:
        raise DataError("need at least 2 classes")
    if planted_per_class < 1 or min(sizes) < 0 or len(sizes) != 3:
        raise DataError("bad synthetic corpus request")
    if not 0.0 <= p_signal <= 1.0:
        raise DataError("p_signal must lie in [0, 1]")

    rng = np.random.default_rng(seed)
    planted = planted_tokens(num_classes, planted_per_class)
    noise_vocab = [f"noise{j}" for j in range(noise_vocab_size)]

    def make_instance(instance_id: int) -> Instance:
        label = int(rng.integers(1, num_classes + 1))
        tokens = [t for t in planted[label] if rng.random() < p_signal]
        if noise_vocab and noise_per_instance > 0:
            picks = rng.integers(0, len(noise_vocab), size=noise_per_instance)
            tokens.extend(noise_vocab[i] for i in picks)
        order = rng.permutation(len(tokens))
        text = " ".join(tokens[i] for i in order)
        return Instance(id=instance_id, text=text, gold=label)

    next_id = 0
    parts = []
    for size in sizes:
        part = []
        for _ in range(size):
            part.append(make_instance(next_id))
            next_id += 1
        parts.append(part)
    pool, validation, test = parts
    return pool, validation, test
