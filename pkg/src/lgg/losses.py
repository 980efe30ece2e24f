"""Batch-level graph losses and regularizers (forward values only)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import softmax

from .analysis import per_class_smoothness, smoothness_gap
from .errors import InvalidInput, InvalidParameter
from .graph import SparseGraph, as_features, as_labels, cosine_similarity, knn_graph


def graph_smoothness_loss(outputs, labels, alpha: float, k: int,
                          metric: str = "euclidean", num_classes: int | None = None) -> float:
    """Sum over classes of indicator smoothness on a top-k RBF graph of the outputs.

    Edge weights are ``exp(-alpha * ||f_i - f_j||)``; each vertex keeps its
    ``k`` heaviest edges (union). Only edges between distinct classes
    contribute, each once per endpoint class.
    """
    x = as_features(outputs, "outputs")
    if not alpha > 0:
        raise InvalidParameter("alpha must be positive")
    y, c = as_labels(labels, x.shape[0], num_classes)
    graph = knn_graph(x, k, kind="rbf", alpha=alpha, metric=metric)
    return float(np.sum(per_class_smoothness(graph, y, c)))


def _normalized_cosine_graph(features) -> np.ndarray:
    a = np.maximum(cosine_similarity(features), 0.0)
    np.fill_diagonal(a, 0.0)
    d = a.sum(axis=1)
    q = np.zeros_like(d)
    q[d > 0] = 1.0 / np.sqrt(d[d > 0])
    return q[:, None] * a * q[None, :]


def gkd_loss(teacher: Sequence, student: Sequence, task_specific: bool = False,
             labels=None) -> float:
    """Squared Frobenius distance between normalized batch similarity graphs.

    One complete cosine graph per layer and per network, normalized as
    ``D^-1/2 A D^-1/2``; distances are summed over layers. With
    ``task_specific`` the entries joining samples of the same class are
    zeroed in both normalized matrices first.
    """
    teacher, student = list(teacher), list(student)
    if not teacher or len(teacher) != len(student):
        raise InvalidInput(f"layer counts differ or are zero: {len(teacher)} vs {len(student)}")
    t_layers = [as_features(t, "teacher layer") for t in teacher]
    s_layers = [as_features(s, "student layer") for s in student]
    b = t_layers[0].shape[0]
    if any(layer.shape[0] != b for layer in t_layers + s_layers):
        raise InvalidInput("all layers must share the batch size")
    keep = None
    if task_specific:
        if labels is None:
            raise InvalidParameter("task-specific distillation requires labels")
        y, _ = as_labels(labels, b, None)
        keep = y[:, None] != y[None, :]
    total = 0.0
    for t, s in zip(t_layers, s_layers):
        diff = _normalized_cosine_graph(s) - _normalized_cosine_graph(t)
        if keep is not None:
            diff = np.where(keep, diff, 0.0)
        total += float(np.sum(diff * diff))
    return total


def combined_distill_loss(task_loss: float, kd_loss: float, lambda_kd: float) -> float:
    if lambda_kd < 0:
        raise InvalidParameter("lambda_kd must be nonnegative")
    return float(task_loss + lambda_kd * kd_loss)


def same_class_pairs(labels) -> list[tuple[int, int]]:
    """All ordered pairs ``(i, j)``, ``i != j``, sharing a label."""
    y = np.asarray(labels)
    i, j = np.nonzero((y[:, None] == y[None, :]) & ~np.eye(len(y), dtype=bool))
    return list(zip(i.tolist(), j.tolist()))


def affinity_matrix(features, similarity: str = "scaled-dot") -> np.ndarray:
    x = as_features(features)
    if similarity == "scaled-dot":
        return (x @ x.T) / np.sqrt(x.shape[1])
    if similarity == "cosine":
        return cosine_similarity(x)
    raise InvalidParameter(f"unknown similarity {similarity!r}")


def affinity_loss(features, pairs: Iterable[Sequence[int]],
                  similarity: str = "scaled-dot") -> tuple[float, float]:
    """Affinity mass of the target pairs and the loss ``1 - mass / n``.

    The affinity matrix is softmax-normalized row by row with the diagonal
    excluded, so every row carries unit mass and ``0 <= mass <= n``.

    Returns
    -------
    (loss, mass)
    """
    a = affinity_matrix(features, similarity)
    n = a.shape[0]
    if n < 2:
        raise InvalidInput("affinity loss needs at least two samples")
    target = np.zeros((n, n), dtype=bool)
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise InvalidInput(f"invalid target pair ({i}, {j})")
        target[i, j] = True
    np.fill_diagonal(a, -np.inf)
    a_hat = softmax(a, axis=1)
    # per-row split into mass inside and outside S; dividing by their own sum
    # makes the full and the empty target exact (loss 0 and 1)
    outside = ~target
    np.fill_diagonal(outside, False)
    inside_row = np.where(target, a_hat, 0.0).sum(axis=1)
    outside_row = np.where(outside, a_hat, 0.0).sum(axis=1)
    total = inside_row + outside_row
    mass = float(np.sum(inside_row / total))
    loss = float(np.sum(outside_row / total)) / n
    return loss, mass


def smoothness_gap_regularizer(layer_graphs: Sequence[SparseGraph], labels,
                               num_classes: int | None = None) -> float:
    """Sum of label-smoothness gaps between consecutive layer graphs."""
    graphs = list(layer_graphs)
    if len(graphs) < 2:
        raise InvalidParameter("need at least two layer graphs")
    return float(sum(smoothness_gap(g0, g1, labels, num_classes)
                     for g0, g1 in zip(graphs[:-1], graphs[1:])))


# ---------------------------------------------------------------------------
# peer regularization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeerBank:
    """Peer feature maps ``(N, p, d)`` and the attention layer ``a``.

    ``a(x, y) = weights[:d] . x + weights[d:] . y + bias``.
    """

    peers: np.ndarray
    weights: np.ndarray
    bias: float = 0.0
    leaky_slope: float = 0.01

    def __post_init__(self):
        peers = np.asarray(self.peers, dtype=np.float64)
        if peers.ndim == 2:
            peers = peers[None]
        if peers.ndim != 3 or peers.shape[0] < 1 or peers.shape[1] < 1 or peers.shape[2] < 1:
            raise InvalidInput("peers must have shape (N, p, d) with N, p, d >= 1")
        if not np.all(np.isfinite(peers)):
            raise InvalidInput("peers contain non-finite values")
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.shape != (2 * peers.shape[2],):
            raise InvalidInput(f"attention weights need length {2 * peers.shape[2]}, got {w.size}")
        object.__setattr__(self, "peers", peers)
        object.__setattr__(self, "weights", w)

    @property
    def candidates(self) -> np.ndarray:
        """Peer pixels stacked peer-major, shape ``(N * p, d)``."""
        return self.peers.reshape(-1, self.peers.shape[2])


def _leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def peer_attention(input_map, bank: PeerBank, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor indices into ``bank.candidates`` and attention coefficients.

    Each input pixel selects its ``K`` most cosine-similar peer pixels (ties
    go to the lower peer index, then pixel index). Returns arrays of shape
    ``(p, K)``.
    """
    x = as_features(input_map, "input_map")
    cand = bank.candidates
    d = cand.shape[1]
    if x.shape[1] != d:
        raise InvalidInput(f"input map has {x.shape[1]} channels, peers have {d}")
    if K < 1 or K > cand.shape[0]:
        raise InvalidParameter(f"K must lie in [1, {cand.shape[0]}]")
    sim = _unit_rows(x) @ _unit_rows(cand).T
    idx = np.argsort(-sim, axis=1, kind="stable")[:, :K]
    logits = (x @ bank.weights[:d])[:, None] + cand[idx] @ bank.weights[d:] + bank.bias
    # LeakyReLU is positively homogeneous, so the max shift cancels in the ratio
    score = _leaky_relu(np.exp(logits - logits.max(axis=1, keepdims=True)), bank.leaky_slope)
    coeffs = score / score.sum(axis=1, keepdims=True)
    return idx, coeffs


def peer_regularize(input_map, bank: PeerBank, K: int) -> np.ndarray:
    """Replace every pixel by the attention-weighted mean of its K nearest peer pixels."""
    idx, coeffs = peer_attention(input_map, bank, K)
    return np.einsum("pk,pkd->pd", coeffs, bank.candidates[idx])
