import numpy as np
import pytest
from hypothesis import given, strategies as st

from letsplay.vectorize import (OOVError, SparseBag, VocabMismatch, Vocabulary, bag_matrix,
                                bag_of, build_vocab, combine_bags)


def test_build_vocab_first_appearance():
    assert build_vocab(["a", "b", "a"]).tokens == ["a", "b"]
    assert build_vocab(["x"], ["y", "x"]).tokens == ["x", "y"]
    assert len(build_vocab([])) == 0


def test_vocab_lookup_name_inverse(tmp_path):
    v = Vocabulary(["mario", "goomba", "koopa"])
    for i, t in enumerate(v):
        assert v.lookup(t) == i and v.name(i) == t
    with pytest.raises(KeyError):
        v.lookup("luigi")
    with pytest.raises(ValueError):
        Vocabulary(["a", "a"])
    v.save(tmp_path / "v.txt")
    assert Vocabulary.load(tmp_path / "v.txt") == v


def test_bag_of_examples():
    v = Vocabulary(["mario", "goomba"])
    bag, dropped = bag_of(["mario", "mario", "goomba"], v)
    assert bag.entries == {0: 2, 1: 1} and dropped == 0
    assert bag_of([], v)[0].entries == {}
    bag, dropped = bag_of(["luigi"], Vocabulary(["mario"]))
    assert bag.entries == {} and dropped == 1
    with pytest.raises(OOVError):
        bag_of(["luigi"], Vocabulary(["mario"]), oov="error")


def test_bag_of_count_map():
    v = Vocabulary(["mario", "goomba"])
    assert bag_of({"goomba": 3, "mario": 1}, v)[0].entries == {0: 1, 1: 3}


def test_sparse_bag_invariants():
    b = SparseBag({0: 1, 2: 0, 3: 2}, 5)
    assert b.entries == {0: 1, 3: 2}
    with pytest.raises(IndexError):
        SparseBag({5: 1}, 5)
    with pytest.raises(ValueError):
        SparseBag({0: -1}, 5)
    assert SparseBag.from_dense(b.to_dense()) == b
    assert b.binarized().entries == {0: 1, 3: 1}


def test_combine_examples():
    a, b = SparseBag({0: 1}, 4), SparseBag({0: 2, 3: 1}, 4)
    assert combine_bags([a, b]).entries == {0: 3, 3: 1}
    assert combine_bags([b]) == b
    assert combine_bags([]).entries == {}
    with pytest.raises(VocabMismatch):
        combine_bags([SparseBag({0: 1}, 4), SparseBag({0: 1}, 5)])


bags = st.dictionaries(st.integers(0, 7), st.integers(1, 5), max_size=6).map(lambda d: SparseBag(d, 8))


@given(bags, bags, bags)
def test_combine_monoid(a, b, c):
    assert combine_bags([a, b]) == combine_bags([b, a])
    assert combine_bags([combine_bags([a, b]), c]) == combine_bags([a, combine_bags([b, c])])
    assert combine_bags([a, SparseBag({}, 8)]) == a


@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=30))
def test_bag_of_preserves_total(tokens):
    bag, dropped = bag_of(tokens, Vocabulary(["a", "b", "c", "d"]))
    assert bag.total() == len(tokens) and dropped == 0


def test_bag_matrix():
    m = bag_matrix([SparseBag({0: 1}, 3), SparseBag({2: 4}, 3)])
    assert np.array_equal(m, [[1, 0, 0], [0, 0, 4]])
