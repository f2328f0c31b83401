"""Standard vs per-cluster, true vs random cluster, and the medoid baseline."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cluster import ClusterModel, assign_tests, cluster_corpus
from .ingest import Corpus, tokenize
from .metric import DistanceConfig, cosine_distance
from .predictors import PredictorSpec, PredictorSuite, train_suite
from .vectorize import SparseBag, Vocabulary, bag_of, build_vocab

DEFAULT_APPROACHES = ("random", "forest", "knn5", "knn10")
CSV_HEADER = ("approach", "mode", "mean", "std", "n", "seed")


@dataclass
class ReportRow:
    approach: str
    mode: str
    ids: list[str]
    distances: list[float]

    @property
    def n(self) -> int:
        return len(self.distances)

    @property
    def mean(self) -> float:
        return mean_std(self.distances)[0]

    @property
    def std(self) -> float:
        return mean_std(self.distances)[1]


@dataclass
class EvalReport:
    rows: list[ReportRow]
    seed: int
    fingerprints: dict[str, str] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def row(self, approach: str, mode: str) -> ReportRow:
        for r in self.rows:
            if r.approach == approach and r.mode == mode:
                return r
        raise KeyError((approach, mode))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            m, s = mean_std(r.distances)
            w.writerow([r.approach, r.mode, f"{m:.6f}", f"{s:.6f}", r.n, self.seed])
        return buf.getvalue()

    def to_jsonl(self) -> str:
        head = {"seed": self.seed, "std": "population", "fingerprints": self.fingerprints, **self.meta}
        lines = [json.dumps({"meta": head}, sort_keys=True)]
        for r in self.rows:
            for i, d in zip(r.ids, r.distances):
                lines.append(json.dumps({"approach": r.approach, "mode": r.mode, "id": i,
                                         "distance": d}))
        return "\n".join(lines) + "\n"


def mean_std(xs: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    n = len(xs)
    if n == 0:
        raise ValueError("no values")
    m = math.fsum(xs) / n
    return m, math.sqrt(math.fsum((x - m) ** 2 for x in xs) / n)


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, tag])))


@dataclass
class Split:
    """Train/test pair vectorized for modelling and for scoring.

    Model features (sprites and words) use training vocabularies.  Truth
    comments are scored over train+test words, training words first, so
    predicted bags embed by index and test-only words still count against
    every prediction.
    """

    train: Corpus
    test: Corpus
    eval_vocab: Vocabulary
    truth: list[SparseBag]

    @classmethod
    def make(cls, train: Corpus, test: Corpus) -> "Split":
        if not len(test):
            raise ValueError("empty test corpus")
        if train.records and test.records:
            test = test.revectorize(train.sprite_vocab, train.word_vocab)
        test_tokens = [tokenize(e.comment_text) for e in test]
        vocab = build_vocab(train.word_vocab, *test_tokens)
        truth = [bag_of(t, vocab)[0] for t in test_tokens]
        return cls(train, test, vocab, truth)

    def lift(self, bag: SparseBag) -> SparseBag:
        return SparseBag(bag.entries, len(self.eval_vocab))


def evaluate(suite: PredictorSuite, split: Split, clusters=None) -> list[float]:
    """Cosine distance between each prediction and the withheld comment."""
    preds = suite.predict(split.test.examples, clusters)
    return [cosine_distance(split.lift(p), t) for p, t in zip(preds, split.truth)]


def _specs(approaches, seed: int, base: PredictorSpec | None) -> list[PredictorSpec]:
    base = base or PredictorSpec()
    out = []
    for a in approaches:
        s = PredictorSpec.parse(a, trees=base.trees, max_depth=base.max_depth, seed=seed,
                                bootstrap=base.bootstrap)
        out.append(s)
    return out


def _meta(clusters: ClusterModel) -> dict:
    return {"k": clusters.k, "cluster_sizes": clusters.sizes(), "medoid_ids": clusters.medoid_ids}


def _fingerprints(split: Split) -> dict:
    return {"train": split.train.fingerprint(), "test": split.test.fingerprint()}


def experiment_standard_vs_percluster(train: Corpus, test: Corpus, seed: int,
                                      approaches=DEFAULT_APPROACHES,
                                      clusters: ClusterModel | None = None, k_max: int = 10,
                                      cfg: DistanceConfig = DistanceConfig(),
                                      base: PredictorSpec | None = None,
                                      threads: int = 1) -> EvalReport:
    """Each approach trained on everything, then once per cluster; two rows each."""
    split = Split.make(train, test)
    if clusters is None:
        clusters = cluster_corpus(train.examples, min(k_max, len(train)), cfg, seed)
    rows = []
    ids = split.test.ids
    for spec in _specs(approaches, seed, base):
        for mode, cm in (("standard", None), ("per-cluster", clusters)):
            suite = train_suite(train.examples, cm, spec, threads)
            rows.append(ReportRow(spec.label, mode, ids, evaluate(suite, split)))
    return EvalReport(rows, seed, _fingerprints(split), _meta(clusters))


def random_clusters(n: int, k: int, seed: int) -> np.ndarray:
    """Independent uniform cluster index per test element."""
    return _rng(seed, 2).integers(0, k, n)


def experiment_true_vs_random_cluster(train: Corpus, test: Corpus, seed: int,
                                      approaches=DEFAULT_APPROACHES,
                                      clusters: ClusterModel | None = None, k_max: int = 10,
                                      cfg: DistanceConfig = DistanceConfig(),
                                      base: PredictorSpec | None = None,
                                      threads: int = 1) -> EvalReport:
    """Per-cluster suites routed by frame-nearest medoid vs a random cluster."""
    split = Split.make(train, test)
    if clusters is None:
        clusters = cluster_corpus(train.examples, min(k_max, len(train)), cfg, seed)
    owners = random_clusters(len(split.test), clusters.k, seed)
    rows = []
    ids = split.test.ids
    for spec in _specs(approaches, seed, base):
        suite = train_suite(train.examples, clusters, spec, threads)
        rows.append(ReportRow(spec.label, "true-cluster", ids, evaluate(suite, split)))
        if spec.kind == "random":
            # fresh draw stream so both columns see the same sampling sequence
            suite = train_suite(train.examples, clusters, spec, threads)
        rows.append(ReportRow(spec.label, "random-cluster", ids, evaluate(suite, split, owners)))
    return EvalReport(rows, seed, _fingerprints(split), _meta(clusters))


def medoid_comment_baseline(clusters: ClusterModel, train: Corpus, test: Corpus,
                            seed: int) -> EvalReport:
    """Truth vs the frame-nearest medoid's comment and vs a random medoid's."""
    if clusters.k < 1 or not clusters.medoid_ids:
        raise ValueError("empty cluster model")
    split = Split.make(train, test)
    by_id = {e.id: e for e in train}
    med_bags = [split.lift(by_id[m].comment_bag) for m in clusters.medoid_ids]
    near = assign_tests(split.test.examples, clusters, train.examples)
    rand = random_clusters(len(split.test), clusters.k, seed)
    ids = split.test.ids
    rows = [
        ReportRow("medoid", "frame-nearest", ids,
                  [cosine_distance(med_bags[c], t) for c, t in zip(near, split.truth)]),
        ReportRow("medoid", "random", ids,
                  [cosine_distance(med_bags[c], t) for c, t in zip(rand, split.truth)]),
    ]
    return EvalReport(rows, seed, _fingerprints(split), _meta(clusters))
