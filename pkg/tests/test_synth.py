import pytest

from letsplay.ingest import corpus_jsonl
from letsplay.synth import core_sprites, core_words, generate_synthetic_corpus, topic_label


def test_sizes_and_labels():
    tr, te = generate_synthetic_corpus(6, 333, 306, 7)
    assert (len(tr), len(te)) == (333, 306)
    assert {e.topic_label for e in tr} <= {topic_label(j) for j in range(6)}
    assert len({topic_label(j) for j in range(9)}) == 9


def test_deterministic():
    a = generate_synthetic_corpus(4, 50, 40, 3, 0.1)
    b = generate_synthetic_corpus(4, 50, 40, 3, 0.1)
    assert corpus_jsonl(a[0].records) == corpus_jsonl(b[0].records)
    assert corpus_jsonl(a[1].records) == corpus_jsonl(b[1].records)
    c = generate_synthetic_corpus(4, 50, 40, 4, 0.1)
    assert corpus_jsonl(a[0].records) != corpus_jsonl(c[0].records)


def test_noise_zero_uses_only_core():
    tr, te = generate_synthetic_corpus(4, 120, 60, 1, 0.0)
    labels = [topic_label(j) for j in range(4)]
    for c in (tr, te):
        for r in c.records:
            j = labels.index(r["topic"])
            assert set(r["sprites"]) <= set(core_sprites(j))
            assert set(r["comment"].split()) <= set(core_words(j))


def test_noise_zero_topics_disjoint_in_bags():
    tr, _ = generate_synthetic_corpus(3, 90, 10, 2, 0.0)
    for a in tr:
        for b in tr:
            if a.topic_label != b.topic_label:
                assert not set(a.sprite_bag.entries) & set(b.sprite_bag.entries)


def test_test_corpus_uses_train_vocab():
    tr, te = generate_synthetic_corpus(3, 30, 30, 5)
    assert te.sprite_vocab is tr.sprite_vocab and te.word_vocab is tr.word_vocab


def test_frames_consecutive_and_unique():
    tr, _ = generate_synthetic_corpus(3, 80, 10, 6)
    stamps = [t for e in tr for t in e.frame_timestamps]
    assert len(stamps) == len(set(stamps))


@pytest.mark.parametrize("args", [(1, 10, 10, 0), (5, 4, 10, 0), (3, 0, 10, 0), (3, 10, 10, 0, 1.5)])
def test_invalid_arguments(args):
    with pytest.raises(ValueError):
        generate_synthetic_corpus(*args)
