"""Cosine distances on bags and the weighted text+frame distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .vectorize import SparseBag, VocabMismatch


@dataclass(frozen=True)
class DistanceConfig:
    text_weight: float = 0.75
    frame_weight: float = 0.25

    def __post_init__(self):
        if self.text_weight < 0 or self.frame_weight < 0:
            raise ValueError("distance weights must be nonnegative")
        if not math.isclose(self.text_weight + self.frame_weight, 1.0, abs_tol=1e-12):
            raise ValueError("distance weights must sum to 1")


def _finish(dot, na, nb):
    # shared by the scalar and matrix paths so integer bags give bit-identical results
    return 1.0 - dot / math.sqrt(na * nb)


def cosine_distance(a: SparseBag, b: SparseBag) -> float:
    """1 - cos(a, b).  One all-zero side gives 1, both zero gives 0."""
    if a.dim != b.dim and a.dim and b.dim:
        raise VocabMismatch(f"bags of dimension {a.dim} and {b.dim}")
    if not a.entries or not b.entries:
        return 0.0 if not a.entries and not b.entries else 1.0
    if len(a.entries) > len(b.entries):
        a, b = b, a
    dot = math.fsum(v * b.entries[i] for i, v in a.entries.items() if i in b.entries)
    na = math.fsum(v * v for v in a.entries.values())
    nb = math.fsum(v * v for v in b.entries.values())
    return min(1.0, max(0.0, _finish(dot, na, nb)))


def paired_distance(x, y, cfg: DistanceConfig = DistanceConfig()) -> float:
    return (cfg.text_weight * cosine_distance(x.comment_bag, y.comment_bag)
            + cfg.frame_weight * cosine_distance(x.sprite_bag, y.sprite_bag))


def frame_distance(x, y) -> float:
    return cosine_distance(x.sprite_bag, y.sprite_bag)


def cosine_distance_matrix(A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Pairwise cosine distances between the rows of A and B (default A).

    Exact for integer-valued rows: dot products and squared norms are
    integers, so the result matches `cosine_distance` bit for bit.
    """
    if B is None:
        B = A
    dot = A @ B.T
    na = np.einsum("ij,ij->i", A, A)
    nb = np.einsum("ij,ij->i", B, B)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 - dot / np.sqrt(na[:, None] * nb[None, :])
    za = na == 0
    zb = nb == 0
    out[za, :] = 1.0
    out[:, zb] = 1.0
    out[np.ix_(za, zb)] = 0.0
    return np.clip(out, 0.0, 1.0)


def paired_distance_matrix(text: np.ndarray, frames: np.ndarray,
                           cfg: DistanceConfig = DistanceConfig()) -> np.ndarray:
    return (cfg.text_weight * cosine_distance_matrix(text)
            + cfg.frame_weight * cosine_distance_matrix(frames))
