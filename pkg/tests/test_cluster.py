import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn import metrics as skm

import oracles
from tdapipe.cluster import (calinski_harabasz, classical_mds, cut, davies_bouldin, dendrogram_json,
                             hierarchical, kmeans, silhouette, validity_report)
from tdapipe.errors import DegenerateInputError, ValidationError
from tdapipe.metrics import dtw_matrix, euclidean_matrix

seeds = st.integers(0, 2**31 - 1)
BLOBS = np.array([[0.0], [0.1], [10.0], [10.1]])


def _blobs(seed, n=10, d=2, gap=20.0):
    rng = np.random.default_rng(seed)
    x = np.vstack([rng.normal(size=(n, d)), rng.normal(size=(n, d)) + gap])
    return x, np.repeat([0, 1], n)


def test_average_linkage_hand_values():
    dend = hierarchical(euclidean_matrix(BLOBS), "average")
    heights = dend.heights()
    np.testing.assert_allclose(heights[:2], [0.1, 0.1], atol=1e-12)
    assert abs(heights[2] - 10.0) < 1e-12
    assert hierarchical(euclidean_matrix(np.array([[0.0], [3.0]]))).merges == ((0, 1, 3.0, 2),)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from(["single", "complete", "average"]))
def test_linkage_matches_naive_agglomeration(seed, linkage):
    x = np.random.default_rng(seed).normal(size=(8, 2))
    dm = euclidean_matrix(x)
    np.testing.assert_allclose(hierarchical(dm, linkage).heights(), oracles.naive_linkage_heights(dm.d, linkage),
                               rtol=0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from(["single", "complete", "average"]))
def test_hierarchical_permutation_equivariant(seed, linkage):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(9, 2))
    perm = rng.permutation(9)
    a = cut(hierarchical(euclidean_matrix(x), linkage), 3).labels
    b = cut(hierarchical(euclidean_matrix(x[perm]), linkage), 3).labels
    # same partition up to relabelling once b is mapped back to the original order
    back = np.empty(9, dtype=int)
    back[perm] = b
    assert len({(int(i), int(j)) for i, j in zip(a, back)}) == 3
    np.testing.assert_allclose(hierarchical(euclidean_matrix(x), linkage).heights(),
                               hierarchical(euclidean_matrix(x[perm]), linkage).heights(), atol=1e-12)


def test_cut():
    dend = hierarchical(euclidean_matrix(BLOBS))
    assert list(cut(dend, 1).labels) == [0, 0, 0, 0]
    assert list(cut(dend, 4).labels) == [0, 1, 2, 3]
    assert list(cut(dend, 2).labels) == [0, 0, 1, 1]
    with pytest.raises(ValidationError):
        cut(dend, 5)


def test_dendrogram_json():
    obj = json.loads(dendrogram_json(hierarchical(euclidean_matrix(BLOBS))))
    assert len(obj["merges"]) == 3 and obj["linkage"] == "average"


def test_mds_two_points():
    res = classical_mds(euclidean_matrix(np.array([[0.0, 0.0], [3.0, 4.0]])), 1)
    np.testing.assert_allclose(sorted(res.cloud.points[:, 0]), [-2.5, 2.5], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_mds_reconstructs_planar_cloud(seed):
    x = np.random.default_rng(seed).normal(size=(12, 2))
    res = classical_mds(euclidean_matrix(x), 2)
    assert res.reconstruction_error <= 1e-8
    assert res.cloud.provenance == "mds_embedding"


def test_mds_reports_negative_mass_for_dtw():
    rng = np.random.default_rng(0)
    dm = dtw_matrix([rng.normal(size=int(rng.integers(3, 9))) for _ in range(10)])
    res = classical_mds(dm, 3)
    assert np.all(np.isfinite(res.cloud.points))
    assert res.negative_mass >= 0 and np.isfinite(res.reconstruction_error)


def test_mds_fewer_positive_eigenvalues_warns():
    collinear = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [4.0, 0.0]])
    with pytest.warns(UserWarning):
        res = classical_mds(euclidean_matrix(collinear), 2)
    assert res.cloud.points.shape[1] == 1 and res.notes


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_kmeans_recovers_blobs(seed):
    x, truth = _blobs(seed)
    got = kmeans(x, 2, seed=seed, restarts=5).labels
    assert np.array_equal(got, truth)


def test_kmeans_edge_cases():
    x = np.random.default_rng(1).normal(size=(6, 2))
    singles = kmeans(x, 6, seed=0)
    assert sorted(singles.labels) == list(range(6)) and singles.inertia == 0
    one = kmeans(x, 1, seed=0)
    assert abs(one.inertia - x.var(axis=0).sum() * len(x)) < 1e-9
    with pytest.raises(ValidationError):
        kmeans(x, 7)
    with pytest.raises(DegenerateInputError):
        kmeans(np.zeros((4, 2)), 2)


def test_kmeans_deterministic():
    x = np.random.default_rng(2).normal(size=(30, 2))
    a, b = kmeans(x, 3, seed=5, restarts=4), kmeans(x, 3, seed=5, restarts=4)
    assert np.array_equal(a.labels, b.labels) and a.inertia == b.inertia


def test_silhouette_hand_value_and_conventions():
    want = ((10.05 - 0.1) / 10.05 + (9.95 - 0.1) / 9.95) / 2
    assert abs(silhouette(euclidean_matrix(BLOBS), [0, 0, 1, 1]) - want) < 1e-12
    assert silhouette(euclidean_matrix(np.zeros((4, 2))), [0, 1, 0, 1]) == 0
    assert silhouette(euclidean_matrix(BLOBS), [0, 1, 2, 3]) == 0
    with pytest.raises(ValidationError):
        silhouette(euclidean_matrix(BLOBS), [0, 0, 0, 0])


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 4))
def test_indices_match_sklearn(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(15, 3))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, 15 - k)])
    assert abs(silhouette(euclidean_matrix(x), labels) - skm.silhouette_score(x, labels)) < 1e-9
    db = davies_bouldin(x, labels)
    assert abs(db - oracles.mp_davies_bouldin(x, labels)) <= 1e-12 * max(1.0, db)
    # sklearn's centroid distances go through the expanded dot-product form (~1e-8 relative error)
    assert abs(db - skm.davies_bouldin_score(x, labels)) <= 1e-7 * max(1.0, db)
    ch = calinski_harabasz(x, labels)
    assert abs(ch - skm.calinski_harabasz_score(x, labels)) <= 1e-9 * max(1.0, ch)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_indices_isometry_invariant(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(12, 2))
    labels = np.concatenate([[0, 1, 2], rng.integers(0, 3, 9)])
    theta = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    y = x @ rot.T + rng.normal(size=2) * 10
    assert abs(silhouette(euclidean_matrix(x), labels) - silhouette(euclidean_matrix(y), labels)) < 1e-9
    assert abs(davies_bouldin(x, labels) - davies_bouldin(y, labels)) < 1e-9
    assert abs(calinski_harabasz(x, labels) - calinski_harabasz(y, labels)) < 1e-9 * calinski_harabasz(x, labels)


def test_davies_bouldin_cases():
    assert davies_bouldin(BLOBS, [0, 0, 1, 1]) == pytest.approx(0.01, abs=1e-12)
    near = davies_bouldin(BLOBS, [0, 0, 1, 1])
    far = davies_bouldin(BLOBS + np.array([[0], [0], [90], [90]]), [0, 0, 1, 1])
    assert far < near
    assert davies_bouldin(np.array([[0.0], [1.0], [5.0]]), [0, 1, 2]) == 0
    with pytest.raises(DegenerateInputError, match="0 and 1"):
        davies_bouldin(np.array([[-1.0], [1.0], [-2.0], [2.0]]), [0, 0, 1, 1])


def test_calinski_harabasz_cases():
    assert calinski_harabasz(BLOBS, [0, 0, 1, 1]) == pytest.approx(20000.0, rel=1e-12)
    with pytest.warns(UserWarning):
        assert calinski_harabasz(np.array([[0.0], [0.0], [5.0]]), [0, 0, 1]) == float("inf")
    assert np.isfinite(calinski_harabasz(np.array([[0.0], [1.0], [5.0]]), [0, 0, 1]))


def test_calinski_harabasz_random_labels_near_one():
    vals = []
    for s in range(40):
        rng = np.random.default_rng(s)
        x = rng.normal(size=(60, 2))
        labels = np.concatenate([[0, 1], rng.integers(0, 2, 58)])
        vals.append(calinski_harabasz(x, labels))
    assert 0.5 < np.mean(vals) < 1.6


def test_validity_report_without_coordinates():
    rep = validity_report(euclidean_matrix(BLOBS), [0, 0, 1, 1])
    assert rep.davies_bouldin is None and rep.calinski_harabasz is None and rep.notes
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        full = validity_report(euclidean_matrix(BLOBS), [0, 0, 1, 1], BLOBS)
    assert full.davies_bouldin == pytest.approx(0.01)
