"""Typographical noise injection for robustness experiments.

Each alphanumeric character is independently selected with a configured
probability and receives one edit operation. Whitespace and punctuation are
never selected, so sentence and token structure survives even at high rates.
"""

from __future__ import annotations

import hashlib
import random
import string
from dataclasses import dataclass, field

OPS = ("substitute", "delete", "insert", "transpose")


@dataclass(frozen=True)
class TypoSpec:
    """Noise parameters; weights are normalized to sum to one."""

    rate: float = 0.03
    ops: dict[str, float] = field(
        default_factory=lambda: {op: 1.0 for op in OPS}
    )
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"typo rate must be in [0, 1], got {self.rate}")
        unknown = set(self.ops) - set(OPS)
        if unknown:
            raise ValueError(f"unknown typo ops: {sorted(unknown)}")
        if not self.ops or any(w <= 0 for w in self.ops.values()):
            raise ValueError("op weights must be positive")

    def normalized_weights(self) -> list[tuple[str, float]]:
        total = sum(self.ops.values())
        return [(op, self.ops[op] / total) for op in OPS if op in self.ops]

    def to_dict(self) -> dict:
        return {"rate": self.rate, "ops": dict(self.ops), "seed": self.seed}


def derive_seed(base_seed: int, key: str) -> int:
    """Stable per-record seed so batch runs noise each record independently."""
    digest = hashlib.sha256(f"{base_seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def inject_typos(text: str, spec: TypoSpec) -> tuple[str, int]:
    """Apply character-level noise; returns (noisy text, applied edit count).

    Operations on a selected character: substitute with a random lowercase
    letter, delete it, insert a random lowercase letter after it, or
    transpose it with the next alphanumeric character (degrading to a
    substitution at the end of the text). Deterministic for a fixed seed.
    """
    rng = random.Random(spec.seed)
    ops, weights = zip(*spec.normalized_weights())

    alnum_positions = [i for i, ch in enumerate(text) if ch.isalnum()]
    next_alnum = {
        pos: alnum_positions[j + 1] if j + 1 < len(alnum_positions) else None
        for j, pos in enumerate(alnum_positions)
    }

    # Decide every edit in one scan of the original text so the RNG stream
    # is independent of how earlier edits rewrite the buffer.
    substitutions: list[tuple[int, str]] = []
    deletions: list[int] = []
    insertions: list[tuple[int, str]] = []
    transpositions: list[tuple[int, int]] = []
    for pos in alnum_positions:
        if rng.random() >= spec.rate:
            continue
        op = rng.choices(ops, weights=weights)[0]
        if op == "transpose" and next_alnum[pos] is None:
            op = "substitute"
        if op == "substitute":
            original = text[pos]
            choices = [c for c in string.ascii_lowercase if c != original]
            substitutions.append((pos, rng.choice(choices)))
        elif op == "delete":
            deletions.append(pos)
        elif op == "insert":
            insertions.append((pos, rng.choice(string.ascii_lowercase)))
        else:
            transpositions.append((pos, next_alnum[pos]))

    buffer = list(text)
    for a, b in transpositions:
        buffer[a], buffer[b] = buffer[b], buffer[a]
    for pos, letter in substitutions:
        buffer[pos] = letter
    for pos, letter in insertions:
        buffer[pos] = buffer[pos] + letter
    for pos in deletions:
        buffer[pos] = ""

    edit_count = (
        len(substitutions) + len(deletions) + len(insertions) + len(transpositions)
    )
    return "".join(buffer), edit_count
