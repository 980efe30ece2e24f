"""Semi-supervised feature and label diffusion.

``transfer_sgc`` smooths features over a cosine k-NN graph before a simple
classifier is fitted on the few labeled rows. ``propagate_labels`` diffuses a
one-hot label matrix over the normalized adjacency and derives pseudo-labels
together with per-sample certainty and per-class balance weights, which
``weighted_loss_combine`` uses to reweight per-sample losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput, InvalidParameter, NumericalFailure
from .graph import SparseGraph, as_features, knn_graph, normalized_adjacency
from .spectral import sgc_diffuse


@dataclass(frozen=True)
class PartialLabels:
    """Labels known for a subset of ``n`` samples."""

    n: int
    labeled_indices: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        idx = np.asarray(self.labeled_indices, dtype=np.int64).ravel()
        lab = np.asarray(self.labels, dtype=np.int64).ravel()
        if idx.shape != lab.shape:
            raise InvalidInput("labeled_indices and labels must have equal length")
        if idx.size < 1 or idx.size > self.n:
            raise InvalidInput("need between 1 and n labeled samples")
        if len(np.unique(idx)) != idx.size:
            raise InvalidInput("labeled indices must be distinct")
        if idx.min() < 0 or idx.max() >= self.n:
            raise InvalidInput("labeled index out of range")
        if self.num_classes < 1 or lab.min() < 0 or lab.max() >= self.num_classes:
            raise InvalidInput("label out of range")
        object.__setattr__(self, "labeled_indices", idx)
        object.__setattr__(self, "labels", lab)

    @property
    def unlabeled_indices(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.labeled_indices] = False
        return np.flatnonzero(mask)

    def label_matrix(self) -> np.ndarray:
        """One-hot ``(n, c)`` matrix, zero rows for unlabeled samples."""
        y = np.zeros((self.n, self.num_classes))
        y[self.labeled_indices, self.labels] = 1.0
        return y


@dataclass(frozen=True)
class PseudoLabelResult:
    z: np.ndarray
    pseudo_labels: np.ndarray
    omega: np.ndarray
    zeta: np.ndarray
    warnings: tuple[str, ...] = field(default=())
    metadata: dict = field(default_factory=dict)


def transfer_sgc(features, labels: PartialLabels | None, k: int, alpha: float, m: int) -> np.ndarray:
    """Diffuse all features over a cosine k-NN graph built on every row.

    Labels only serve to check the sample count; the graph is unsupervised.
    """
    x = as_features(features)
    if labels is not None and labels.n != x.shape[0]:
        raise InvalidInput(f"labels describe {labels.n} samples, features have {x.shape[0]}")
    if m == 0:
        return x.copy()
    graph = knn_graph(x, k, kind="cosine")
    return sgc_diffuse(x, graph, alpha, m)


def label_certainty(z) -> np.ndarray:
    """``1 - H(p) / log(c)`` where ``p`` is each row of ``z`` scaled to sum to 1.

    Rows summing to zero or less get 0. With a single class every
    positive row is certain.
    """
    z = np.asarray(z, dtype=np.float64)
    n, c = z.shape
    sums = z.sum(axis=1)
    ok = sums > 0
    out = np.zeros(n)
    if not np.any(ok):
        return out
    if c == 1:
        out[ok] = 1.0
        return out
    p = np.clip(z[ok] / sums[ok, None], 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    entropy = -plogp.sum(axis=1)
    out[ok] = np.clip(1.0 - entropy / np.log(c), 0.0, 1.0)
    return out


def class_balance(assigned, num_classes: int) -> tuple[np.ndarray, bool]:
    """Reciprocal class counts; empty classes get 0 and set the returned flag."""
    counts = np.bincount(np.asarray(assigned, dtype=np.int64), minlength=num_classes)
    zeta = np.zeros(num_classes)
    nz = counts > 0
    zeta[nz] = 1.0 / counts[nz]
    return zeta, bool(np.any(~nz))


def normalized_adjacency_radius(graph: SparseGraph) -> float:
    """Spectral radius of ``D^-1/2 A D^-1/2``.

    ``D^1/2 1`` restricted to any non-isolated component is an eigenvector
    with eigenvalue 1 and no eigenvalue exceeds 1 in magnitude, so the
    radius is 1 for any graph with an edge and 0 otherwise.
    """
    return 1.0 if graph.num_edges else 0.0


def propagate_labels(graph: SparseGraph, labels: PartialLabels, alpha: float,
                     method: str = "closed-form", max_iter: int = 10_000,
                     tol: float = 1e-9) -> PseudoLabelResult:
    """Solve ``(I - alpha E) Z = Y`` and derive pseudo-labels.

    ``E`` is the symmetric normalized adjacency of ``graph``. ``alpha`` must
    satisfy ``0 < alpha < 1 / rho(E)``. ``method="iterative"`` runs
    ``Z <- alpha E Z + Y`` from ``Z = Y`` until the largest entry change drops
    below ``tol``.
    """
    if labels.n != graph.n:
        raise InvalidInput(f"labels describe {labels.n} samples, graph has {graph.n}")
    e = normalized_adjacency(graph)
    rho = normalized_adjacency_radius(graph)
    if not alpha > 0 or alpha * rho >= 1.0:
        raise InvalidParameter(f"alpha={alpha} outside (0, 1/rho(E)) with rho(E)={rho:g}")
    y = labels.label_matrix()

    if method == "closed-form":
        system = (sp.identity(graph.n, format="csc") - alpha * e).toarray()
        try:
            z = np.linalg.solve(system, y)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"singular propagation system: {exc}") from exc
        iterations = None
    elif method == "iterative":
        z = y.copy()
        for iterations in range(1, max_iter + 1):
            nxt = alpha * (e @ z) + y
            change = np.max(np.abs(nxt - z), initial=0.0)
            z = nxt
            if change < tol:
                break
        else:
            raise NumericalFailure(f"no convergence after {max_iter} iterations")
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    if not np.all(np.isfinite(z)):
        raise NumericalFailure("propagation produced non-finite values")

    flags = []
    pseudo = np.argmax(z, axis=1).astype(np.int64)
    pseudo[labels.labeled_indices] = labels.labels
    unl = labels.unlabeled_indices
    if unl.size and np.any(z[unl].sum(axis=1) <= 0):
        flags.append("unreached-samples")
    if np.any(np.bincount(labels.labels, minlength=labels.num_classes) == 0):
        flags.append("class-without-labels")

    omega = label_certainty(z)
    zeta, empty = class_balance(pseudo, labels.num_classes)
    if empty:
        flags.append("empty-class")
    meta = {
        "method": method,
        "alpha": float(alpha),
        "spectral_radius": rho,
        "certainty": "1 - normalized entropy of sum-normalized rows",
        "iterations": iterations,
    }
    return PseudoLabelResult(z, pseudo, omega, zeta, tuple(flags), meta)


def weighted_loss_combine(per_sample_losses, labels: PartialLabels,
                          pseudo: PseudoLabelResult) -> float:
    """Class-balanced loss: ``zeta[y_i] * l_i`` on labeled rows and
    ``omega_i * zeta[yhat_i] * l_i`` on the others."""
    losses = np.asarray(per_sample_losses, dtype=np.float64)
    if losses.shape != (labels.n,):
        raise InvalidInput(f"expected {labels.n} losses, got shape {losses.shape}")
    if not np.all(np.isfinite(losses)):
        raise InvalidInput("losses must be finite")
    lab = labels.labeled_indices
    unl = labels.unlabeled_indices
    total = np.sum(pseudo.zeta[labels.labels] * losses[lab])
    total += np.sum(pseudo.omega[unl] * pseudo.zeta[pseudo.pseudo_labels[unl]] * losses[unl])
    return float(total)
