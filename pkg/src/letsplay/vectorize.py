"""Vocabularies and sparse count bags shared by the sprite and word sides."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np


class OOVError(KeyError):
    pass


class VocabMismatch(ValueError):
    pass


class Vocabulary:
    """Ordered unique tokens; a token's index is its position."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._tokens: list[str] = []
        self._index: dict[str, int] = {}
        for tok in tokens:
            if tok in self._index:
                raise ValueError(f"duplicate token {tok!r}")
            self._index[tok] = len(self._tokens)
            self._tokens.append(tok)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, tok) -> bool:
        return tok in self._index

    def __iter__(self):
        return iter(self._tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} tokens)"

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def lookup(self, tok: str) -> int:
        return self._index[tok]

    def name(self, idx: int) -> str:
        return self._tokens[idx]

    def save(self, path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self._tokens), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        return cls(line for line in text.split("\n") if line != "")


def build_vocab(*streams: Iterable[str]) -> Vocabulary:
    """Tokens in first-appearance order across the streams, taken in order."""
    seen: dict[str, None] = {}
    for stream in streams:
        for tok in stream:
            seen.setdefault(tok, None)
    return Vocabulary(seen)


@dataclass(frozen=True)
class SparseBag:
    """Nonnegative counts over a vocabulary of size `dim`.

    Zero entries are never stored.  Counts are integers at ingest time and
    become reals for model predictions.
    """

    entries: Mapping[int, float] = field(default_factory=dict)
    dim: int = 0

    def __post_init__(self):
        clean = {}
        for idx, val in self.entries.items():
            if not 0 <= idx < self.dim:
                raise IndexError(f"index {idx} outside vocabulary of size {self.dim}")
            if val < 0:
                raise ValueError(f"negative count {val} at index {idx}")
            if val != 0:
                clean[int(idx)] = val
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx: int) -> float:
        return self.entries.get(idx, 0)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SparseBag) and self.dim == other.dim
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.dim, tuple(self.entries.items())))

    def __add__(self, other: "SparseBag") -> "SparseBag":
        return combine_bags([self, other])

    def total(self) -> float:
        return sum(self.entries.values())

    def scale(self, c: float) -> "SparseBag":
        return SparseBag({i: v * c for i, v in self.entries.items()}, self.dim)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for i, v in self.entries.items():
            out[i] = v
        return out

    @classmethod
    def from_dense(cls, vec) -> "SparseBag":
        vec = np.asarray(vec, dtype=float)
        nz = np.flatnonzero(vec)
        return cls({int(i): float(vec[i]) for i in nz}, len(vec))

    def named(self, vocab: Vocabulary) -> dict[str, float]:
        return {vocab.name(i): v for i, v in self.entries.items()}

    def binarized(self) -> "SparseBag":
        return SparseBag({i: 1 for i in self.entries}, self.dim)


def bag_of(items, vocab: Vocabulary, oov: str = "drop") -> tuple[SparseBag, int]:
    """Count tokens (a token list) or a name->count map into a bag.

    Returns the bag and the number of out-of-vocabulary occurrences dropped.
    """
    if oov not in ("drop", "error"):
        raise ValueError(f"oov must be 'drop' or 'error', got {oov!r}")
    counts = items if isinstance(items, Mapping) else Counter(items)
    entries: dict[int, float] = {}
    dropped = 0
    for tok, c in counts.items():
        if tok in vocab:
            i = vocab.lookup(tok)
            entries[i] = entries.get(i, 0) + c
        elif oov == "error":
            raise OOVError(tok)
        else:
            dropped += c
    return SparseBag(entries, len(vocab)), dropped


def combine_bags(bags: Iterable[SparseBag]) -> SparseBag:
    """Element-wise sum; the empty bag is the identity."""
    # a dimensionless empty bag is the identity for any vocabulary
    bags = [b for b in bags if b.dim or b.entries]
    if not bags:
        return SparseBag()
    dim = bags[0].dim
    out: dict[int, float] = {}
    for b in bags:
        if b.dim != dim:
            raise VocabMismatch(f"cannot combine bags of dimension {dim} and {b.dim}")
        for i, v in b.entries.items():
            out[i] = out.get(i, 0) + v
    return SparseBag(out, dim)


def bag_matrix(bags: Iterable[SparseBag], dim: int | None = None) -> np.ndarray:
    bags = list(bags)
    if dim is None:
        dim = bags[0].dim if bags else 0
    out = np.zeros((len(bags), dim))
    for r, b in enumerate(bags):
        if b.dim != dim:
            raise VocabMismatch(f"bag of dimension {b.dim} in a matrix of width {dim}")
        for i, v in b.entries.items():
            out[r, i] = v
    return out
