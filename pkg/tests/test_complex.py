import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from tdapipe.complex import Filtration, cech_value, rips_filtration, verify_inclusion
from tdapipe.errors import ConfigError, InvariantError, ScaleError
from tdapipe.metrics import euclidean_matrix

seeds = st.integers(0, 2**31 - 1)


def _cloud(seed, n_max=9, d=2):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(int(rng.integers(1, n_max + 1)), d))


def test_square_rips(square):
    f = rips_filtration(euclidean_matrix(square), 2, 2.0)
    assert f.counts() == {0: 4, 1: 6, 2: 4}
    edges = sorted(s.value for s in f if s.dim == 1)
    assert edges == [1.0] * 4 + [math.sqrt(2)] * 2
    assert all(s.value == math.sqrt(2) for s in f if s.dim == 2)


def test_threshold_cut():
    f = rips_filtration(euclidean_matrix(np.array([[0.0], [5.0]])), 2, 1.0)
    assert f.counts() == {0: 2}


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_complete_complex_counts(seed):
    cloud = _cloud(seed)
    n = len(cloud)
    f = rips_filtration(euclidean_matrix(cloud), 2, math.inf)
    assert len(f) == n + math.comb(n, 2) + math.comb(n, 3)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3), st.floats(0.1, 3.0))
def test_rips_matches_clique_oracle(seed, max_dim, cap):
    cloud = _cloud(seed)
    dm = euclidean_matrix(cloud)
    f = rips_filtration(dm, max_dim, cap)
    got = sorted((s.vertices, s.value) for s in f)
    want = sorted(oracles.clique_simplices(dm.d, cap, max_dim))
    assert got == want
    f.check()


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.1, 3.0))
def test_truncation_nests(seed, v):
    dm = euclidean_matrix(_cloud(seed))
    full = rips_filtration(dm, 2, 4.0)
    direct = rips_filtration(dm, 2, v)
    assert full.truncate(v).dump() == direct.dump()


def test_determinism():
    dm = euclidean_matrix(np.random.default_rng(9).normal(size=(8, 2)).round(1))
    assert rips_filtration(dm, 2).dump() == rips_filtration(dm, 2).dump()


def test_order_keys_with_ties(square):
    f = rips_filtration(euclidean_matrix(square), 2)
    keys = [(s.value, s.dim, s.vertices) for s in f]
    assert keys == sorted(keys)


def test_bad_max_dim():
    with pytest.raises(ConfigError):
        rips_filtration(euclidean_matrix(np.zeros((2, 1)) + [[0], [1]]), 4)


def test_filtration_check_catches_face_order():
    # the edge enters before one of its vertices
    dims = [0, 1, 0]
    values = [0.0, 1.0, 0.0]
    verts = [[0, -1], [0, 1], [1, -1]]
    with pytest.raises(InvariantError):
        Filtration(dims, values, verts, 2, 1.0)
    # a triangle whose value is below one of its edges
    dims = [0, 0, 0, 1, 1, 2, 1]
    values = [0, 0, 0, 1.0, 1.0, 1.0, 2.0]
    verts = [[0, -1, -1], [1, -1, -1], [2, -1, -1], [0, 1, -1], [0, 2, -1], [0, 1, 2], [1, 2, -1]]
    with pytest.raises(InvariantError):
        Filtration(dims, values, verts, 3, 2.0)


def test_cech_examples():
    assert cech_value(np.array([[0.0, 0.0], [1.0, 0.0]])) == 1
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    assert abs(cech_value(tri) - 2 / math.sqrt(3)) < 1e-12
    obtuse = np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 0.1]])
    assert abs(cech_value(obtuse) - oracles.meb_diameter_grid(obtuse)) < 1e-3
    assert abs(cech_value(obtuse) - 4) < 1e-2
    with pytest.raises(ScaleError):
        cech_value(np.zeros((4, 2)))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cech_value_matches_grid_search(seed):
    pts = np.random.default_rng(seed).uniform(-1, 1, size=(3, 2))
    assert abs(cech_value(pts) - oracles.meb_diameter_grid(pts)) < 1e-3


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cech_bounded_by_edges(seed):
    pts = np.random.default_rng(seed).normal(size=(3, 3))
    longest = max(np.linalg.norm(pts[i] - pts[j]) for i, j in combinations(range(3), 2))
    # enclosing ball is at least the longest edge and at most 2/sqrt(3) of it (Jung)
    assert longest - 1e-12 <= cech_value(pts) <= 2 / math.sqrt(3) * longest + 1e-12


def test_inclusion_examples():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    assert verify_inclusion(tri, 2 / math.sqrt(3))
    assert verify_inclusion(np.array([[0.0, 0], [1, 0], [2, 0], [3.5, 0]]), 1.0)
    for seed in range(10):
        cloud = np.random.default_rng(seed).normal(size=(8, 2))
        for eps in (0.0, 0.3, 1.0, 5.0):
            assert verify_inclusion(cloud, eps)
    with pytest.raises(ScaleError):
        verify_inclusion(np.zeros((13, 2)), 1.0)
