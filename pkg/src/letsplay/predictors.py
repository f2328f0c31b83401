"""Frame-to-comment predictors: random, random forest and KNN.

All predictors map a sprite bag to a bag over the training word vocabulary.
Suites wrap one predictor (standard mode) or one per cluster.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cluster import ClusterModel, assign_tests
from .metric import cosine_distance_matrix
from .vectorize import SparseBag, bag_matrix

KINDS = ("random", "forest", "knn")


@dataclass(frozen=True)
class PredictorSpec:
    kind: str = "forest"
    knn_k: int = 5
    trees: int = 10
    max_depth: int = 200
    seed: int = 0
    bootstrap: bool = True     # off only for exact-oracle tests

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.knn_k < 1 or self.trees < 1 or self.max_depth < 1:
            raise ValueError("knn_k, trees and max_depth must be at least 1")

    @property
    def label(self) -> str:
        return f"knn{self.knn_k}" if self.kind == "knn" else self.kind

    @classmethod
    def parse(cls, label: str, **kw) -> "PredictorSpec":
        """'random', 'forest', 'knn5', 'knn10', ... -> spec."""
        if label.startswith("knn") and label[3:].isdigit():
            return cls(kind="knn", knn_k=int(label[3:]), **kw)
        return cls(kind=label, **kw)


def _rows(train):
    return list(train)


def _word_dim(train) -> int:
    return train[0].comment_bag.dim


# -- random ------------------------------------------------------------------

class RandomPredictor:
    """Ignores its input; returns a uniformly drawn training comment bag."""

    def __init__(self, train, seed: int = 0):
        train = _rows(train)
        if not train:
            raise ValueError("empty training set")
        self.bags = [e.comment_bag for e in train]
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def predict(self, sprite_bag: SparseBag) -> SparseBag:
        return self.bags[int(self.rng.integers(len(self.bags)))]

    def predict_many(self, sprite_bags) -> list[SparseBag]:
        return [self.predict(b) for b in sprite_bags]


def train_random(train, seed: int = 0) -> RandomPredictor:
    return RandomPredictor(train, seed)


# -- forest ------------------------------------------------------------------

@dataclass
class Tree:
    """Flat array tree.  Leaves have feature -1 and a row in `values`."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    leaf: list[int] = field(default_factory=list)
    values: np.ndarray | None = None
    depth: int = 0

    def _add(self):
        for col in (self.feature, self.left, self.right, self.leaf):
            col.append(-1)
        self.threshold.append(0.0)
        return len(self.feature) - 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X), dtype=int)
        for r, x in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[r] = self.leaf[node]
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.values[self.apply(X)]


def _best_split(X, Y, Y2sum, idx, features, rng, n_try):
    """Scan features in a random order until `n_try` non-constant ones are seen.

    Returns (feature, threshold, left_idx, right_idx) or None.
    """
    n = len(idx)
    total = Y[idx].sum(axis=0)
    best = None
    best_cost = math.inf
    seen = 0
    for f in rng.permutation(features):
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        if vals[0] == vals[-1]:
            continue
        seen += 1
        Ys = Y[idx[order]]
        csum = np.cumsum(Ys, axis=0)[:-1]
        csq = np.cumsum(Y2sum[idx[order]])[:-1]
        nl = np.arange(1, n)
        # valid cut after position i only where the value changes
        ok = vals[1:] != vals[:-1]
        left_sse = csq - (csum * csum).sum(axis=1) / nl
        rsum = total - csum
        right_sse = (Y2sum[idx].sum() - csq) - (rsum * rsum).sum(axis=1) / (n - nl)
        cost = np.where(ok, left_sse + right_sse, np.inf)
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost = cost[i]
            thr = (vals[i] + vals[i + 1]) / 2.0
            best = (int(f), float(thr))
        if seen >= n_try:
            break
    if best is None:
        return None
    f, thr = best
    mask = X[idx, f] <= thr
    return f, thr, idx[mask], idx[~mask]


def build_tree(X: np.ndarray, Y: np.ndarray, idx: np.ndarray, max_depth: int,
               n_try: int, rng: np.random.Generator) -> Tree:
    tree = Tree()
    leaves = []
    Y2sum = (Y * Y).sum(axis=1)
    features = np.arange(X.shape[1])
    stack = [(tree._add(), idx, 0)]
    while stack:
        node, rows, depth = stack.pop()
        tree.depth = max(tree.depth, depth)
        pure = len(rows) < 2 or not (Y[rows] != Y[rows[0]]).any()
        split = None if pure or depth >= max_depth else _best_split(X, Y, Y2sum, rows, features, rng, n_try)
        if split is None:
            tree.leaf[node] = len(leaves)
            leaves.append(Y[rows].mean(axis=0))
            continue
        f, thr, li, ri = split
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = tree._add()
        tree.right[node] = tree._add()
        # right pushed first so the left subtree is built first
        stack.append((tree.right[node], ri, depth + 1))
        stack.append((tree.left[node], li, depth + 1))
    tree.values = np.array(leaves)
    return tree


class ForestPredictor:
    def __init__(self, trees: list[Tree], word_dim: int, sprite_dim: int):
        self.trees = trees
        self.word_dim = word_dim
        self.sprite_dim = sprite_dim

    def predict_dense(self, X: np.ndarray) -> np.ndarray:
        return sum(t.predict(X) for t in self.trees) / len(self.trees)

    def predict(self, sprite_bag: SparseBag) -> SparseBag:
        return self.predict_many([sprite_bag])[0]

    def predict_many(self, sprite_bags) -> list[SparseBag]:
        X = bag_matrix(sprite_bags, self.sprite_dim)
        return [SparseBag.from_dense(row) for row in self.predict_dense(X)]


def tree_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def train_forest(train, spec: PredictorSpec = PredictorSpec(), threads: int = 1) -> ForestPredictor:
    """Bagged multi-output regression trees on sprite bags -> word bags.

    Tree t draws its bootstrap sample and feature orders from a generator
    seeded by (spec.seed, t), so any thread count yields the same forest.
    """
    train = _rows(train)
    if not train:
        raise ValueError("empty training set")
    sprite_dim = train[0].sprite_bag.dim
    X = bag_matrix([e.sprite_bag for e in train], sprite_dim)
    Y = bag_matrix([e.comment_bag for e in train])
    n = len(train)
    n_try = max(1, math.ceil(math.sqrt(max(sprite_dim, 1))))

    def grow(ss):
        rng = np.random.Generator(np.random.PCG64(ss))
        idx = np.sort(rng.integers(0, n, n)) if spec.bootstrap else np.arange(n)
        return build_tree(X, Y, idx, spec.max_depth, n_try, rng)

    seeds = tree_seeds(spec.seed, spec.trees)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            trees = list(ex.map(grow, seeds))
    else:
        trees = [grow(s) for s in seeds]
    return ForestPredictor(trees, Y.shape[1], sprite_dim)


def predict_forest(model: ForestPredictor, sprite_bag: SparseBag) -> SparseBag:
    return model.predict(sprite_bag)


# -- knn ---------------------------------------------------------------------

class KNNPredictor:
    """Binary union of the words of the k frame-nearest training examples."""

    def __init__(self, train, k: int):
        train = _rows(train)
        if not train:
            raise ValueError("empty training set")
        self.requested_k = k
        self.k = min(k, len(train))
        self.sprite_dim = train[0].sprite_bag.dim
        self.X = bag_matrix([e.sprite_bag for e in train], self.sprite_dim)
        self.words = [e.comment_bag for e in train]
        self.texts = [e.comment_text for e in train]

    @property
    def clamped(self) -> bool:
        return self.k != self.requested_k

    def neighbors(self, sprite_bags) -> np.ndarray:
        Q = bag_matrix(sprite_bags, self.sprite_dim)
        D = cosine_distance_matrix(Q, self.X)
        # stable sort keeps the lower training index first among equal distances
        return np.argsort(D, axis=1, kind="stable")[:, :self.k]

    def predict_many(self, sprite_bags) -> list[SparseBag]:
        out = []
        for nb in self.neighbors(sprite_bags):
            dim = self.words[0].dim
            out.append(SparseBag({i: 1 for j in nb for i in self.words[j].entries}, dim))
        return out

    def predict(self, sprite_bag: SparseBag) -> SparseBag:
        return self.predict_many([sprite_bag])[0]

    def retrieve(self, sprite_bag: SparseBag) -> str:
        """Raw comment of the single nearest training example."""
        nb = self.neighbors([sprite_bag])[0, 0]
        return self.texts[nb]


def train_knn(train, spec: PredictorSpec = PredictorSpec(kind="knn")) -> KNNPredictor:
    return KNNPredictor(train, spec.knn_k)


def predict_knn(model: KNNPredictor, sprite_bag: SparseBag) -> SparseBag:
    return model.predict(sprite_bag)


def retrieve_comment(model: KNNPredictor, sprite_bag: SparseBag) -> str:
    return model.retrieve(sprite_bag)


# -- suites ------------------------------------------------------------------

def train_one(train, spec: PredictorSpec, threads: int = 1):
    if spec.kind == "random":
        return train_random(train, spec.seed)
    if spec.kind == "forest":
        return train_forest(train, spec, threads)
    return train_knn(train, spec)


class PredictorSuite:
    """One predictor (standard) or one per cluster (per-cluster).

    Per-cluster prediction assigns each test element to the frame-nearest
    medoid, then asks that cluster's predictor.
    """

    def __init__(self, spec: PredictorSpec, models: list, clusters: ClusterModel | None,
                 train):
        self.spec = spec
        self.models = models
        self.clusters = clusters
        self.train = list(train)

    @property
    def mode(self) -> str:
        return "standard" if self.clusters is None else "per-cluster"

    def assign(self, tests) -> np.ndarray:
        if self.clusters is None:
            return np.zeros(len(tests), dtype=int)
        return assign_tests(tests, self.clusters, self.train)

    def predict(self, tests, clusters=None) -> list[SparseBag]:
        """Predict for each test example, optionally routing to given cluster indices."""
        tests = list(tests)
        owner = self.assign(tests) if clusters is None else np.asarray(clusters)
        out: list = [None] * len(tests)
        # iterate in test order so seeded predictors draw reproducibly
        for c in sorted(set(owner.tolist())):
            pos = [i for i in range(len(tests)) if owner[i] == c]
            preds = self.models[c].predict_many([tests[i].sprite_bag for i in pos])
            for i, p in zip(pos, preds):
                out[i] = p
        return out

    def to_dict(self) -> dict:
        blobs = []
        for m in self.models:
            if isinstance(m, ForestPredictor):
                blobs.append({"kind": "forest", "word_dim": m.word_dim, "sprite_dim": m.sprite_dim,
                              "trees": [_tree_blob(t) for t in m.trees]})
            elif isinstance(m, KNNPredictor):
                blobs.append({"kind": "knn", "k": m.k, "requested_k": m.requested_k})
            else:
                blobs.append({"kind": "random", "size": len(m.bags)})
        return {"spec": asdict(self.spec), "mode": self.mode,
                "train_ids": [e.id for e in self.train],
                "clusters": None if self.clusters is None else self.clusters.to_dict(),
                "models": blobs}

    @classmethod
    def from_dict(cls, d: dict, train) -> "PredictorSuite":
        """Rebuild a suite over the training examples it was trained on.

        Forests are restored from their stored trees; KNN and random models
        are rebuilt from the cluster members, which reproduces them exactly.
        """
        by_id = {e.id: e for e in train}
        missing = [i for i in d["train_ids"] if i not in by_id]
        if missing:
            raise ValueError(f"suite was trained on examples absent from the corpus: {missing[:3]}")
        rows = [by_id[i] for i in d["train_ids"]]
        spec = PredictorSpec(**d["spec"])
        clusters = None if d.get("clusters") is None else ClusterModel.from_dict(d["clusters"])
        if clusters is None:
            groups = [rows]
        else:
            groups = [[e for e in rows if clusters.assignment[e.id] == c] for c in range(clusters.k)]
        if len(groups) != len(d["models"]):
            raise ValueError("suite model count does not match its clusters")
        models = []
        for blob, members in zip(d["models"], groups):
            if blob["kind"] == "forest":
                models.append(ForestPredictor([_tree_from_blob(t, blob["word_dim"]) for t in blob["trees"]],
                                              blob["word_dim"], blob["sprite_dim"]))
            else:
                models.append(train_one(members, spec))
        return cls(spec, models, clusters, rows)


def _tree_blob(t: Tree) -> dict:
    return {"feature": t.feature, "threshold": t.threshold, "left": t.left, "right": t.right,
            "leaf": t.leaf, "depth": t.depth,
            "values": [SparseBag.from_dense(v).entries for v in t.values]}


def _tree_from_blob(b: dict, word_dim: int) -> Tree:
    values = np.zeros((len(b["values"]), word_dim))
    for r, entries in enumerate(b["values"]):
        for i, v in entries.items():
            values[r, int(i)] = v
    return Tree(list(b["feature"]), [float(x) for x in b["threshold"]], list(b["left"]),
                list(b["right"]), list(b["leaf"]), values, b["depth"])


def train_suite(train, clusters: ClusterModel | None, spec: PredictorSpec,
                threads: int = 1) -> PredictorSuite:
    train = list(train)
    if clusters is None:
        return PredictorSuite(spec, [train_one(train, spec, threads)], None, train)
    models = []
    for c in range(clusters.k):
        members = [e for e in train if clusters.assignment[e.id] == c]
        if not members:
            raise ValueError(f"cluster {c} has no members")
        models.append(train_one(members, spec, threads))
    return PredictorSuite(spec, models, clusters, train)
