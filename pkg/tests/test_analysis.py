import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import clique_edges, random_graph
from lgg.errors import InvalidInput, InvalidParameter
from lgg.graph import SparseGraph, combinatorial_laplacian
from lgg.analysis import (
    label_smoothness,
    margin_influence,
    per_class_smoothness,
    smoothness,
    smoothness_edge_sum,
    smoothness_gap,
    smoothness_spectral,
)
from lgg.spectral import eigendecompose


def brute_class_smoothness(graph, labels, c):
    """sum_c s_c^T L s_c with a dense Laplacian."""
    lap = combinatorial_laplacian(graph).toarray()
    out = []
    for k in range(c):
        s = (np.asarray(labels) == k).astype(float)
        out.append(s @ lap @ s)
    return np.array(out)


def two_cliques_bridge():
    edges = clique_edges(range(4)) + clique_edges(range(4, 8)) + [(3, 4, 1.0)]
    return SparseGraph.from_edges(8, edges)


# --- smoothness -------------------------------------------------------------

def test_smoothness_examples():
    g = SparseGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    assert smoothness(g, np.ones(3)) == 0
    assert smoothness(SparseGraph.from_edges(2, [(0, 1, 1.0)]), [1.0, 0.0]) == 1
    assert smoothness(g, [0.0, 1.0, 0.0]) == 2


def test_smoothness_triple_identity(rng):
    for _ in range(50):
        n = int(rng.integers(2, 33))
        g = random_graph(rng, n)
        s = rng.normal(size=n)
        q = smoothness(g, s)
        spec = smoothness_spectral(eigendecompose(combinatorial_laplacian(g)), s)
        edge = smoothness_edge_sum(g, s)
        assert abs(q - spec) <= 1e-8 * (1 + abs(q))
        assert abs(q - edge) <= 1e-8 * (1 + abs(q))


def test_smoothness_rejects_multichannel():
    with pytest.raises(InvalidInput):
        smoothness(SparseGraph.empty(3), np.ones((3, 2)))
    with pytest.raises(InvalidInput):
        smoothness(SparseGraph.empty(3), np.ones(4))


# --- label smoothness ---------------------------------------------------------

def test_label_smoothness_disjoint_cliques():
    g = SparseGraph.from_edges(6, clique_edges(range(3)) + clique_edges(range(3, 6)))
    rep = label_smoothness(g, [0, 0, 0, 1, 1, 1])
    assert rep.normalized == 0 and rep.total_raw == 0
    assert rep.M == 3 and rep.C == 2 and rep.warnings == ()


def test_label_smoothness_single_crossing_edge():
    # oracle: each indicator gives s^T L s = 1, so the total is 2
    g = SparseGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    labels = [0, 0, 1, 1]
    rep = label_smoothness(g, labels)
    np.testing.assert_array_equal(rep.per_class, brute_class_smoothness(g, labels, 2))
    assert rep.total_raw == 2.0
    assert rep.normalized == 2.0 / (2 * 2 * 2 * 1)


def test_label_smoothness_two_vertices():
    rep = label_smoothness(SparseGraph.from_edges(2, [(0, 1, 1.0)]), [0, 1])
    np.testing.assert_array_equal(rep.per_class, [1.0, 1.0])


def test_label_smoothness_unbalanced_and_missing():
    g = SparseGraph.from_edges(5, [(0, 3, 1.0)])
    rep = label_smoothness(g, [0, 0, 0, 1, 1])
    assert "unbalanced-classes" in rep.warnings and rep.M == 2
    with pytest.raises(InvalidInput):
        label_smoothness(g, [0, 0, 0, 2, 2])
    with pytest.raises(InvalidInput):
        label_smoothness(g, [0, 0, 0, 1, 1], num_classes=3)


def test_label_smoothness_matches_bruteforce(rng):
    for _ in range(30):
        c = int(rng.integers(1, 5))
        m = int(rng.integers(1, 6))
        g = random_graph(rng, c * m)
        labels = rng.permutation(np.repeat(np.arange(c), m))
        rep = label_smoothness(g, labels)
        brute = brute_class_smoothness(g, labels, c)
        np.testing.assert_allclose(rep.per_class, brute, rtol=1e-12, atol=1e-12)
        assert rep.total_raw == pytest.approx(rep.per_class.sum(), abs=1e-10)
        denom = m * m * c * (c - 1)
        assert rep.normalized == (pytest.approx(brute.sum() / denom) if denom else 0.0)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 5))
def test_label_smoothness_zero_iff_no_crossing(seed, c, m):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, c * m, p=float(rng.uniform(0, 0.6)))
    labels = rng.permutation(np.repeat(np.arange(c), m))
    crossing = any(labels[i] != labels[j] for i, j, _ in g.edges())
    assert (label_smoothness(g, labels).total_raw == 0) == (not crossing)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_label_smoothness_relabel_invariant(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 12)
    labels = rng.permutation(np.repeat(np.arange(3), 4))
    perm = rng.permutation(3)
    # class sums are accumulated in a different order, so allow rounding
    assert label_smoothness(g, perm[labels]).normalized == pytest.approx(
        label_smoothness(g, labels).normalized, rel=1e-14, abs=1e-300)


# --- smoothness gap -----------------------------------------------------------

def test_smoothness_gap_examples(rng):
    g = random_graph(rng, 10)
    labels = np.repeat([0, 1], 5)
    assert smoothness_gap(g, g, labels) == 0
    before = per_class_smoothness(g, labels).sum()
    assert smoothness_gap(g, g.scaled(2.0), labels) == pytest.approx(before)
    one = SparseGraph.from_edges(4, [(1, 2, 1.0)])
    labels4 = [0, 0, 1, 1]
    assert smoothness_gap(one, SparseGraph.empty(4), labels4) == label_smoothness(one, labels4).total_raw
    with pytest.raises(InvalidInput):
        smoothness_gap(one, SparseGraph.empty(5), labels4)


# --- MARGIN -------------------------------------------------------------------

def test_margin_bridge_endpoints_rank_first():
    g = two_cliques_bridge()
    s = np.r_[np.ones(4), np.zeros(4)]
    scores = margin_influence(g, s).scores
    # dense oracle
    a = g.to_dense()
    d = a.sum(axis=1)
    lnorm = np.eye(8) - a / np.sqrt(np.outer(d, d))
    np.testing.assert_allclose(scores, np.abs(lnorm @ s), atol=1e-15)
    top = set(np.argsort(-scores)[:2])
    assert top == {3, 4}
    others = np.delete(scores, [3, 4])
    assert min(scores[3], scores[4]) > others.max()
    assert scores[4] == pytest.approx(0.25)
    assert scores[3] == pytest.approx(1 - 3 / np.sqrt(12))


def test_margin_constant_and_zero_signals():
    ring = SparseGraph.from_edges(7, [(i, (i + 1) % 7, 1.0) for i in range(7)])
    assert np.max(margin_influence(ring, np.ones(7)).scores) <= 1e-10
    assert np.all(margin_influence(ring, np.zeros(7)).scores == 0)
    out = margin_influence(ring, np.zeros(7), highpass="spectral-complement")
    assert np.all(out.scores == 0)
    with pytest.raises(InvalidParameter):
        margin_influence(ring, np.ones(7), highpass="sobel")


def test_margin_spectral_complement_prefers_bridge():
    g = two_cliques_bridge()
    s = np.r_[np.ones(4), np.zeros(4)]
    res = margin_influence(g, s, highpass="spectral-complement", tau=0.5)
    assert set(np.argsort(-res.scores)[:2]) == {3, 4}
    assert "simoncelli" in res.filter_used


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([-4.0, -0.5, 0.0, 1.0, 2.0, 0.125]),
       st.floats(-10, 10))
def test_margin_homogeneity(seed, alpha_pow2, alpha):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 10)
    s = rng.normal(size=10)
    base = margin_influence(g, s).scores
    assert np.all(base >= 0)
    # power-of-two scalings are exact in floating point
    np.testing.assert_array_equal(margin_influence(g, alpha_pow2 * s).scores, abs(alpha_pow2) * base)
    np.testing.assert_allclose(margin_influence(g, alpha * s).scores, abs(alpha) * base,
                               rtol=1e-13, atol=1e-13 * abs(alpha) * base.max())
