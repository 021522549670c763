from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from tdapipe.errors import ValidationError
from tdapipe.symbolic import (EsaxWord, PaaVector, SaxWord, esax, gaussian_breakpoints, paa, sax, sax_word,
                              symbolic_distance)


def test_paa_examples():
    assert np.array_equal(paa([1, 2, 3, 4], 2).values, [1.5, 3.5])
    assert np.array_equal(paa([1, 2, 3], 3).values, [1, 2, 3])
    np.testing.assert_allclose(paa([1, 2, 3], 2).values, [4 / 3, 8 / 3], atol=1e-15)
    with pytest.raises(ValidationError):
        paa([1, 2], 3)


def _fraction_paa(x, w):
    """Exact rational PAA: frame i covers [i n / w, (i + 1) n / w) of the sample axis."""
    n = len(x)
    out = []
    for i in range(w):
        lo, hi = Fraction(i * n, w), Fraction((i + 1) * n, w)
        total = Fraction(0)
        for j, v in enumerate(x):
            overlap = max(Fraction(0), min(hi, j + 1) - max(lo, j))
            total += overlap * Fraction(v)
        out.append(float(total / (hi - lo)))
    return out


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=30), st.data())
def test_paa_matches_rational_oracle(xs, data):
    w = data.draw(st.integers(1, len(xs)))
    np.testing.assert_allclose(paa(xs, w).values, _fraction_paa(xs, w), rtol=0, atol=1e-12)
    np.testing.assert_allclose(paa(xs, w).values, oracles.repeat_paa(xs, w), rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=30), st.data())
def test_paa_preserves_mean(xs, data):
    w = data.draw(st.integers(1, len(xs)))
    assert abs(paa(xs, w).values.mean() - np.mean(xs)) < 1e-9


def test_breakpoints():
    assert np.array_equal(gaussian_breakpoints(2), [0.0])
    np.testing.assert_allclose(gaussian_breakpoints(4), [-0.6745, 0, 0.6745], atol=1e-4)
    for a in range(2, 21):
        np.testing.assert_allclose(gaussian_breakpoints(a), oracles.stdlib_breakpoints(a), atol=1e-12)
    with pytest.raises(ValidationError):
        gaussian_breakpoints(21)


def test_sax_examples():
    assert sax(PaaVector([-1.0, 0.0, 1.0]), 4).symbols == (0, 2, 3)
    assert sax(PaaVector([-5.0, -4.0]), 4).symbols == (0, 0)
    assert str(SaxWord((0, 2, 3), 4)) == "acd"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-4, 4, allow_nan=False), min_size=1, max_size=20), st.integers(2, 20))
def test_sax_is_monotone_and_matches_scan(vals, a):
    bps = oracles.stdlib_breakpoints(a)
    word = sax(PaaVector(vals), a)
    assert word.symbols == tuple(oracles.scan_symbol(v, bps) for v in vals)
    ordered = sax(PaaVector(sorted(vals)), a).symbols
    assert list(ordered) == sorted(ordered)


def test_sax_word_pipeline():
    x = np.arange(16.0)
    assert sax_word(x, 4, 4).symbols == (0, 1, 2, 3)


def test_esax_examples():
    word = esax(np.zeros(4), 2, 5)
    assert all(lo == mid == hi for lo, mid, hi in word.triples)
    assert esax(np.array([-2.0, 2.0]), 1, 4).triples == ((0, 2, 3),)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=40), st.data(), st.integers(2, 12))
def test_esax_triples_ordered(xs, data, a):
    w = data.draw(st.integers(1, len(xs)))
    for lo, mid, hi in esax(np.array(xs), w, a).triples:
        assert lo <= mid <= hi


def test_esax_flatten_orders():
    word = EsaxWord(((0, 1, 2), (1, 1, 3)), 4)
    assert word.flatten("min-mean-max") == (0, 1, 2, 1, 1, 3)
    assert word.flatten("max-min-mean") == (2, 0, 1, 3, 1, 1)
    with pytest.raises(ValidationError):
        EsaxWord(((2, 1, 3),), 4)


def test_symbolic_distance():
    assert symbolic_distance(PaaVector([1.0, 2.0]), PaaVector([1.0, 2.0])) == 0
    assert symbolic_distance(PaaVector([0.0, 0.0]), PaaVector([3.0, 4.0])) == 5
    with pytest.raises(ValidationError):
        symbolic_distance(PaaVector([0.0]), PaaVector([0.0, 1.0]))
