import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import clique_edges, random_graph
from lgg.errors import InvalidInput, InvalidParameter
from lgg.graph import SparseGraph, knn_graph, normalized_adjacency
from lgg.denoise import (
    PartialLabels,
    class_balance,
    label_certainty,
    propagate_labels,
    transfer_sgc,
    weighted_loss_combine,
)

EDGE = SparseGraph.from_edges(2, [(0, 1, 1.0)])


def random_partial(rng, n, c):
    l = int(rng.integers(1, n + 1))
    idx = rng.choice(n, size=l, replace=False)
    return PartialLabels(n, idx, rng.integers(0, c, size=l), c)


# --- PartialLabels ------------------------------------------------------------

def test_partial_labels_validation():
    p = PartialLabels(5, [3, 0], [1, 0], 2)
    np.testing.assert_array_equal(p.unlabeled_indices, [1, 2, 4])
    np.testing.assert_array_equal(p.label_matrix()[[3, 0]], [[0, 1], [1, 0]])
    for args in [(5, [0, 0], [1, 1], 2), (5, [5], [0], 2), (5, [], [], 2), (5, [1], [2], 2), (5, [1, 2], [0], 2)]:
        with pytest.raises(InvalidInput):
            PartialLabels(*args)


# --- transfer_sgc -------------------------------------------------------------

def test_transfer_sgc_m0_identity(rng):
    x = rng.random((6, 3))
    np.testing.assert_array_equal(transfer_sgc(x, None, 2, 0.5, 0), x)


def test_transfer_sgc_two_rows_add_each_other():
    # two non-orthogonal rows; E swaps them, so each row gains the other
    x = np.array([[1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(transfer_sgc(x, None, 1, 1.0, 1), [[2.0, 1.0], [2.0, 1.0]])


def test_transfer_sgc_orthogonal_rows_have_no_edge():
    x = np.eye(2)
    np.testing.assert_array_equal(transfer_sgc(x, None, 1, 1.0, 1), x)


def test_transfer_sgc_identical_groups_scale(rng):
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 2.0])
    x = np.r_[np.tile(a, (4, 1)), np.tile(b, (4, 1))]
    alpha, m = 0.5, 3
    out = transfer_sgc(x, None, 3, alpha, m)
    # complete within groups, no cross edges (orthogonal), so E maps constants to constants
    np.testing.assert_allclose(out[:4], np.tile((alpha + 1) ** m * a, (4, 1)), rtol=1e-12)
    np.testing.assert_allclose(out[4:], np.tile((alpha + 1) ** m * b, (4, 1)), rtol=1e-12)


def test_transfer_sgc_errors(rng):
    x = rng.random((4, 2))
    with pytest.raises(InvalidParameter):
        transfer_sgc(x, None, 4, 0.5, 1)
    with pytest.raises(InvalidInput):
        transfer_sgc(x, PartialLabels(5, [0], [0], 1), 1, 0.5, 1)


def test_transfer_sgc_tightens_classes():
    rng = np.random.default_rng(7)
    x = np.r_[rng.normal(size=(60, 10)) + 1.0, rng.normal(size=(60, 10)) - 1.0]
    y = np.repeat([0, 1], 60)

    def ratio(f):
        d = np.linalg.norm(f[:, None] - f[None], axis=-1)
        same = y[:, None] == y[None]
        off = ~np.eye(len(y), dtype=bool)
        return d[same & off].mean() / d[~same].mean()

    assert ratio(transfer_sgc(x, None, 10, 0.5, 2)) < ratio(x)


# --- propagate_labels ---------------------------------------------------------

def test_propagate_edgeless():
    p = PartialLabels(3, [1], [1], 2)
    res = propagate_labels(SparseGraph.empty(3), p, 0.9)
    np.testing.assert_array_equal(res.z, p.label_matrix())
    assert "unreached-samples" in res.warnings
    assert res.pseudo_labels[1] == 1
    np.testing.assert_array_equal(res.omega, [0.0, 1.0, 0.0])


def test_propagate_two_vertices():
    p = PartialLabels(2, [0], [0], 1)
    res = propagate_labels(EDGE, p, 0.5)
    np.testing.assert_allclose(res.z[:, 0], [4 / 3, 2 / 3], rtol=1e-14)
    assert res.pseudo_labels[1] == 0


def test_propagate_closed_form_matches_iterative(rng):
    for _ in range(20):
        n = int(rng.integers(2, 33))
        g = random_graph(rng, n)
        p = random_partial(rng, n, int(rng.integers(1, 4)))
        a = 0.9 / max(np.max(np.abs(np.linalg.eigvalsh(normalized_adjacency(g).toarray()))), 1e-12)
        a = min(a, 5.0)
        cf = propagate_labels(g, p, a)
        it = propagate_labels(g, p, a, method="iterative")
        assert np.max(np.abs(cf.z - it.z)) <= 1e-6
        assert it.metadata["iterations"] >= 1


def test_propagate_closed_form_solves_system(rng):
    g = random_graph(rng, 15)
    p = random_partial(rng, 15, 3)
    res = propagate_labels(g, p, 0.7)
    e = normalized_adjacency(g).toarray()
    np.testing.assert_allclose((np.eye(15) - 0.7 * e) @ res.z, p.label_matrix(), atol=1e-12)


def test_propagate_alpha_checks():
    p = PartialLabels(2, [0], [0], 1)
    for bad in (0.0, -0.1, 1.0, 2.0):
        with pytest.raises(InvalidParameter):
            propagate_labels(EDGE, p, bad)
    with pytest.raises(InvalidParameter):
        propagate_labels(EDGE, p, 0.5, method="jacobi")
    with pytest.raises(InvalidInput):
        propagate_labels(EDGE, PartialLabels(3, [0], [0], 1), 0.5)


def test_propagate_component_dominance():
    edges = clique_edges(range(4)) + [(4, 5, 1.0), (5, 6, 1.0), (6, 7, 0.5)]
    g = SparseGraph.from_edges(8, edges)
    p = PartialLabels(8, [2, 7], [1, 0], 2)
    res = propagate_labels(g, p, 0.95)
    np.testing.assert_array_equal(res.pseudo_labels, [1, 1, 1, 1, 0, 0, 0, 0])
    np.testing.assert_allclose(res.zeta, [0.25, 0.25])
    assert res.warnings == ()


def test_propagate_flags():
    g = SparseGraph.from_edges(4, clique_edges(range(4)))
    res = propagate_labels(g, PartialLabels(4, [0], [0], 3), 0.5)
    assert "class-without-labels" in res.warnings
    assert "empty-class" in res.warnings
    np.testing.assert_array_equal(res.zeta, [0.25, 0.0, 0.0])
    assert res.metadata["certainty"]


def test_argmax_ties_to_smallest_class():
    # vertex 1 sits symmetrically between a class-0 and a class-1 seed
    g = SparseGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    res = propagate_labels(g, PartialLabels(3, [0, 2], [1, 0], 2), 0.5)
    assert res.z[1, 0] == res.z[1, 1]
    assert res.pseudo_labels[1] == 0
    assert res.omega[1] == 0.0


# --- certainty and balance ------------------------------------------------------

def test_label_certainty_limits():
    z = np.array([[0.0, 3.0, 0.0], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.5, 0.0], [2.0, 1.0, 1.0]])
    w = label_certainty(z)
    assert w[0] == 1.0 and w[1] == pytest.approx(0.0, abs=1e-15) and w[2] == 0.0 and w[3] == 0.0
    p = np.array([0.5, 0.25, 0.25])
    assert w[4] == pytest.approx(1 + np.sum(p * np.log(p)) / np.log(3))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_label_certainty_in_unit_interval(seed, c):
    z = np.random.default_rng(seed).exponential(size=(10, c))
    w = label_certainty(z)
    assert np.all((w >= 0) & (w <= 1))


def test_class_balance():
    zeta, empty = class_balance([0, 0, 2, 2, 2], 3)
    np.testing.assert_allclose(zeta, [0.5, 0.0, 1 / 3])
    assert empty


# --- weighted loss ----------------------------------------------------------------

def test_weighted_loss_examples():
    g = SparseGraph.empty(1)
    p1 = PartialLabels(1, [0], [0], 1)
    res = propagate_labels(g, p1, 0.5)
    assert weighted_loss_combine([0.0], p1, res) == 0
    assert weighted_loss_combine([2.0], p1, res) == 2.0

    p2 = PartialLabels(2, [0], [0], 1)
    res2 = propagate_labels(EDGE, p2, 0.5)
    # substitute the stated weights directly
    res2 = type(res2)(res2.z, res2.pseudo_labels, np.array([1.0, 0.5]), np.array([0.5]))
    assert weighted_loss_combine([1.0, 1.0], p2, res2) == 0.75
    with pytest.raises(InvalidInput):
        weighted_loss_combine([1.0], p2, res2)


def test_weighted_loss_linear(rng):
    g = random_graph(rng, 12)
    p = random_partial(rng, 12, 3)
    res = propagate_labels(g, p, 0.5)
    a, b = rng.random((2, 12))
    lhs = weighted_loss_combine(2 * a + 3 * b, p, res)
    rhs = 2 * weighted_loss_combine(a, p, res) + 3 * weighted_loss_combine(b, p, res)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_knn_graph_for_propagation_add_transpose(rng):
    x = rng.random((10, 3))
    g = knn_graph(x, 3, symmetrize="add-transpose")
    res = propagate_labels(g, PartialLabels(10, [0, 1], [0, 1], 2), 0.9)
    assert res.z.shape == (10, 2)
