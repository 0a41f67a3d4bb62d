import numpy as np
import pytest

from tritri.numerics import Rng


def test_same_seed_same_sequence():
    assert np.array_equal(Rng(123).random(10), Rng(123).random(10))
    assert np.array_equal(Rng(123).integers(0, 100, 10),
                          Rng(123).integers(0, 100, 10))


def test_named_children_reproducible_and_distinct():
    a1 = Rng(7).child("mask").random(5)
    a2 = Rng(7).child("mask").random(5)
    b = Rng(7).child("dropout").random(5)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


def test_child_stream_independent_of_parent_consumption():
    r1 = Rng(7)
    r1.random(100)  # consume the parent heavily
    r2 = Rng(7)
    assert np.array_equal(r1.child("x").random(3), r2.child("x").random(3))


def test_nested_children_have_paths():
    leaf = Rng(1).child("a").child("b")
    assert leaf.path == "a/b"


def test_seed_must_be_u64():
    with pytest.raises(ValueError):
        Rng(-1)
    with pytest.raises(ValueError):
        Rng(2**64)
    Rng(2**64 - 1)  # boundary accepted
