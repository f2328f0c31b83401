"""K-medoids (PAM) over paired examples and k selection by distortion ratio."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metric import DistanceConfig, cosine_distance_matrix, frame_distance, paired_distance_matrix
from .vectorize import bag_matrix

# swaps must beat the current cost by more than this (relative) to count
_EPS = 1e-12


@dataclass
class ClusterModel:
    k: int
    medoid_ids: list[str]
    medoid_indices: list[int]
    assignment: dict[str, int]
    distances_cfg: DistanceConfig = field(default_factory=DistanceConfig)
    selection_trace: list[dict] = field(default_factory=list)
    cost: float = 0.0
    seed: int = 0

    def members(self, c: int) -> list[str]:
        return [i for i, a in self.assignment.items() if a == c]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for a in self.assignment.values():
            counts[a] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "medoid_ids": self.medoid_ids,
            "medoid_indices": self.medoid_indices,
            "assignment": self.assignment,
            "distance": {"text_weight": self.distances_cfg.text_weight,
                         "frame_weight": self.distances_cfg.frame_weight},
            "cost": self.cost,
            "seed": self.seed,
            "selection_trace": self.selection_trace,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        return cls(k=d["k"], medoid_ids=list(d["medoid_ids"]),
                   medoid_indices=list(d["medoid_indices"]),
                   assignment={k: int(v) for k, v in d["assignment"].items()},
                   distances_cfg=DistanceConfig(**d.get("distance", {})),
                   selection_trace=d.get("selection_trace", []),
                   cost=d.get("cost", 0.0), seed=d.get("seed", 0))


def distance_matrix(examples, cfg: DistanceConfig = DistanceConfig()) -> np.ndarray:
    text = bag_matrix([e.comment_bag for e in examples])
    frames = bag_matrix([e.sprite_bag for e in examples])
    return paired_distance_matrix(text, frames, cfg)


def total_cost(dist: np.ndarray, medoids: Sequence[int]) -> float:
    return math.fsum(dist[:, list(medoids)].min(axis=1))


def assign_nearest(dist: np.ndarray, medoids: Sequence[int]) -> np.ndarray:
    """Column of the nearest medoid per row (first on ties); medoids keep their own."""
    labels = np.argmin(dist[:, list(medoids)], axis=1)
    for c, m in enumerate(medoids):
        labels[m] = c
    return labels


def pam(dist: np.ndarray, k: int) -> list[int]:
    """BUILD then steepest-descent SWAP on a precomputed distance matrix.

    Ties go to the lowest example index.  Returns sorted medoid indices.
    """
    n = dist.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    medoids = [int(np.argmin(dist.sum(axis=1)))]
    nearest = dist[:, medoids[0]].copy()
    while len(medoids) < k:
        gain = np.maximum(nearest[:, None] - dist, 0.0).sum(axis=0)
        gain[medoids] = -1.0
        best = int(np.argmax(gain))
        medoids.append(best)
        nearest = np.minimum(nearest, dist[:, best])

    cost = dist[:, medoids].min(axis=1).sum()
    while k < n:
        sub = dist[:, medoids]
        order = np.argsort(sub, axis=1, kind="stable")
        d1 = sub[np.arange(n), order[:, 0]]
        d2 = sub[np.arange(n), order[:, 1]] if k > 1 else np.full(n, np.inf)
        is_medoid = np.zeros(n, dtype=bool)
        is_medoid[medoids] = True
        costs = np.empty((k, n))
        for slot in range(k):
            base = np.where(order[:, 0] == slot, d2, d1)
            costs[slot] = np.minimum(base[:, None], dist).sum(axis=0)
        costs[:, is_medoid] = np.inf
        tol = _EPS * max(1.0, abs(cost))
        cmin = costs.min()
        if not cmin < cost - tol:
            break
        # among (near-)equal best swaps: lowest incoming index, then lowest outgoing
        slots, cands = np.nonzero(costs <= cmin + tol)
        slot, o = min(zip(slots, cands), key=lambda p: (p[1], medoids[p[0]]))
        medoids[int(slot)] = int(o)
        cost = dist[:, medoids].min(axis=1).sum()
    return sorted(medoids)


def kmedoids(examples, k: int, cfg: DistanceConfig = DistanceConfig(), seed: int = 0,
             dist: np.ndarray | None = None) -> ClusterModel:
    """PAM under the weighted text+frame distance.

    PAM itself is deterministic; `seed` is recorded for the model's provenance.
    """
    if dist is None:
        dist = distance_matrix(examples, cfg)
    n = len(examples)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    medoids = pam(dist, k)
    labels = assign_nearest(dist, medoids)
    return ClusterModel(
        k=k, medoid_ids=[examples[m].id for m in medoids], medoid_indices=medoids,
        assignment={e.id: int(c) for e, c in zip(examples, labels)},
        distances_cfg=cfg, cost=total_cost(dist, medoids), seed=seed)


def distortion(dist: np.ndarray, medoids: Sequence[int], labels: np.ndarray) -> float:
    """Within-cluster sum of squared distances to the assigned medoid."""
    meds = np.asarray(medoids)[labels]
    d = dist[np.arange(len(labels)), meds]
    return math.fsum(d * d)


def alpha(k: int, dims: int) -> float:
    """Dimension weight for the distortion ratio: defined for k >= 2."""
    if k < 2:
        raise ValueError("alpha is defined for k >= 2")
    a = 1.0 - 3.0 / (4.0 * dims)
    for _ in range(3, k + 1):
        a = a + (1.0 - a) / 6.0
    return a


def distortion_ratios(S: Sequence[float], dims: int) -> list[float]:
    """f(1) = 1; f(k) = S_k / (alpha_k S_{k-1}), or 1 when S_{k-1} = 0."""
    f = [1.0]
    for k in range(2, len(S) + 1):
        prev = S[k - 2]
        f.append(1.0 if prev == 0 else S[k - 1] / (alpha(k, dims) * prev))
    return f


def select_k(examples, k_max: int, cfg: DistanceConfig = DistanceConfig(), seed: int = 0,
             threshold: float = 0.85, dims: int | None = None,
             dist: np.ndarray | None = None) -> tuple[int, list[dict]]:
    """Pick k in 1..k_max with the smallest distortion ratio below `threshold`.

    `dims` defaults to the combined sprite and word vocabulary size.  Falls
    back to k = 1 when no ratio is below the threshold.
    """
    n = len(examples)
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max must lie in [1, {n}], got {k_max}")
    if dist is None:
        dist = distance_matrix(examples, cfg)
    if dims is None:
        dims = examples[0].sprite_bag.dim + examples[0].comment_bag.dim
    dims = max(dims, 1)
    S = []
    for k in range(1, k_max + 1):
        meds = pam(dist, k)
        S.append(distortion(dist, meds, assign_nearest(dist, meds)))
    f = distortion_ratios(S, dims)
    trace = [{"k": k, "S": S[k - 1], "f": f[k - 1],
              "alpha": alpha(k, dims) if k >= 2 else None, "dims": dims}
             for k in range(1, k_max + 1)]
    below = [k for k in range(1, k_max + 1) if f[k - 1] < threshold]
    best = min(below, key=lambda k: (f[k - 1], k)) if below else 1
    return best, trace


def cluster_corpus(examples, k_max: int, cfg: DistanceConfig = DistanceConfig(), seed: int = 0,
                   threshold: float = 0.85) -> ClusterModel:
    """select_k followed by kmedoids at the chosen k, sharing one distance matrix."""
    dist = distance_matrix(examples, cfg)
    k, trace = select_k(examples, k_max, cfg, seed, threshold, dist=dist)
    model = kmedoids(examples, k, cfg, seed, dist=dist)
    model.selection_trace = trace
    return model


def assign_test(test, model: ClusterModel, train) -> int:
    """Cluster whose medoid is nearest in sprite-bag distance; ties go low."""
    by_id = {e.id: e for e in train}
    d = [frame_distance(test, by_id[m]) for m in model.medoid_ids]
    return int(np.argmin(d))


def assign_tests(tests, model: ClusterModel, train) -> np.ndarray:
    """Vectorized `assign_test` over many test examples."""
    if not len(tests):
        return np.zeros(0, dtype=int)
    by_id = {e.id: e for e in train}
    meds = bag_matrix([by_id[m].sprite_bag for m in model.medoid_ids])
    X = bag_matrix([t.sprite_bag for t in tests], meds.shape[1])
    return np.argmin(cosine_distance_matrix(X, meds), axis=1)
