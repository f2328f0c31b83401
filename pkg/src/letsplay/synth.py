"""Seeded synthetic Let's Play corpora with planted topic structure.

Every topic owns a disjoint core of sprite types and word types.  An
example picks a topic uniformly, lasts a few seconds (one frame per
second), and draws sprites per frame and words per second from its topic
core with probability ``1 - noise`` and from a pool shared by all topics
otherwise.  A small share of utterances are long rambles spanning many
frames; their bags cover most of the topic core, so they sit near the
middle of each topic and end up as medoids, much like a streamer's
longer monologues over one stretch of a level.

Randomness comes from numpy's PCG64 bit generator seeded with the given
64-bit integer; the output depends on nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import Corpus, corpus_from_records

# the four commentary types, reused cyclically as latent topic labels
COMMENTARY_TYPES = ("reaction", "storytelling", "roleplay", "asmr")

FILLER_WORDS = ("the", "a", "i", "you", "it", "this", "so", "oh", "okay", "like",
                "just", "go", "that", "and", "we", "um", "yeah", "now", "there", "what")
POOL_SPRITES = ("ground", "brick", "cloud", "bush", "hill", "coin_counter")

_SYLLABLES = ("ba", "ko", "mi", "ru", "te", "zo", "pa", "li", "gu", "ne", "sa", "do")


@dataclass(frozen=True)
class SynthShape:
    """Knobs of the generator; the defaults are the shape the experiments use."""

    sprite_core: int = 20         # sprite types per topic
    word_core: int = 40           # word types per topic
    sprites_per_frame: float = 1.0
    mean_extra_seconds: float = 1.0   # duration = geometric seconds with this mean extra
    words_per_second: float = 3.0
    sprite_zipf: float = 0.0      # within-core popularity exponents (0 = uniform)
    word_zipf: float = 1.0
    sprite_pool: int = 6          # how many shared pool sprites / filler words are used
    word_pool: int = 3
    ramble_p: float = 0.12        # chance an utterance is a long ramble
    ramble_seconds: int = 120


def topic_label(j: int) -> str:
    base = COMMENTARY_TYPES[j % len(COMMENTARY_TYPES)]
    return base if j < len(COMMENTARY_TYPES) else f"{base}{j // len(COMMENTARY_TYPES) + 1}"


def _core_word(topic: int, i: int) -> str:
    # pronounceable, tokenizer-stable and unique per (topic, i)
    a, b = divmod(i, len(_SYLLABLES))
    return f"{_SYLLABLES[topic % len(_SYLLABLES)]}{_SYLLABLES[b]}{_SYLLABLES[a % len(_SYLLABLES)]}{topic}x{a}"


def core_sprites(topic: int, shape: SynthShape = SynthShape()) -> list[str]:
    return [f"{topic_label(topic)}_sprite{i}" for i in range(shape.sprite_core)]


def core_words(topic: int, shape: SynthShape = SynthShape()) -> list[str]:
    return [_core_word(topic, i) for i in range(shape.word_core)]


def _weights(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def _draw(rng: np.random.Generator, m: int, noise: float, core: list[str], weights: np.ndarray,
          pool) -> list[str]:
    """m items in order: each from the shared pool with probability `noise`, else the core."""
    off = rng.random(m) < noise
    picks = np.empty(m, dtype=object)
    picks[off] = [pool[j] for j in rng.integers(len(pool), size=int(off.sum()))]
    picks[~off] = [core[j] for j in rng.choice(len(core), size=int((~off).sum()), p=weights)]
    return picks.tolist()


def _records(rng: np.random.Generator, n: int, topics: int, noise: float,
             shape: SynthShape, prefix: str) -> list[dict]:
    sprites = [core_sprites(j, shape) for j in range(topics)]
    words = [core_words(j, shape) for j in range(topics)]
    sp_w = _weights(shape.sprite_core, shape.sprite_zipf)
    wd_w = _weights(shape.word_core, shape.word_zipf)
    p_extra = 1.0 / (1.0 + shape.mean_extra_seconds)
    t = 0
    out = []
    for i in range(n):
        topic = int(rng.integers(topics))
        if rng.random() < shape.ramble_p:
            dur = shape.ramble_seconds
        else:
            dur = int(rng.geometric(p_extra))
        frames = list(range(t, t + dur + 1))
        t += dur + 1 + int(rng.integers(0, 3))
        n_sprites = int((1 + rng.poisson(shape.sprites_per_frame - 1, len(frames))).sum())
        names = _draw(rng, n_sprites, noise, sprites[topic], sp_w, POOL_SPRITES[:shape.sprite_pool])
        counts: dict[str, int] = {}
        for name in names:
            counts[name] = counts.get(name, 0) + 1
        m = 1 + int(rng.poisson(shape.words_per_second * dur))
        toks = _draw(rng, m, noise, words[topic], wd_w, FILLER_WORDS[:shape.word_pool])
        out.append({"id": f"{prefix}{i:05d}", "frames": frames, "sprites": counts,
                    "comment": " ".join(toks), "topic": topic_label(topic)})
    return out


def generate_synthetic_corpus(topics: int, train_n: int, test_n: int, seed: int,
                              noise: float = 0.1, shape: SynthShape = SynthShape()
                              ) -> tuple[Corpus, Corpus]:
    """Train and test corpora drawn from the same planted topics.

    Both corpora are vectorized over vocabularies built from the training
    records; test-only tokens are dropped from the test bags but kept in the
    raw records.
    """
    if topics < 2:
        raise ValueError("topics must be at least 2")
    if train_n < 1 or test_n < 1:
        raise ValueError("train_n and test_n must be positive")
    if topics > min(train_n, test_n):
        raise ValueError("topics must not exceed min(train_n, test_n)")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    train = _records(rng, train_n, topics, noise, shape, "train")
    test = _records(rng, test_n, topics, noise, shape, "test")
    tr = corpus_from_records(train)
    return tr, corpus_from_records(test, tr.sprite_vocab, tr.word_vocab)
