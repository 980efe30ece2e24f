"""Smoothness diagnostics for graph signals and class labels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvalidParameter
from .graph import SparseGraph, as_labels, as_signal, combinatorial_laplacian, normalized_laplacian
from .spectral import HighPass, LaplacianSpectrum, Simoncelli, SpectralResponse, apply_filter, gft


def _single_channel(graph: SparseGraph, signal) -> np.ndarray:
    s = as_signal(signal, graph.n)
    if s.ndim == 2:
        if s.shape[1] != 1:
            raise InvalidInput("expected a single-channel signal")
        s = s[:, 0]
    return s


def smoothness(graph: SparseGraph, signal) -> float:
    """Laplacian quadratic form ``s^T L s``."""
    s = _single_channel(graph, signal)
    return float(s @ (combinatorial_laplacian(graph) @ s))


def smoothness_spectral(spectrum: LaplacianSpectrum, signal) -> float:
    """``sum_i lam_i * s_hat_i**2``; equals :func:`smoothness` by Parseval."""
    coeffs = gft(spectrum, signal)
    if coeffs.ndim == 2:
        coeffs = coeffs[:, 0]
    return float(np.sum(spectrum.eigenvalues * coeffs**2))


def smoothness_edge_sum(graph: SparseGraph, signal) -> float:
    """Half of the double sum ``sum_i sum_j A_ij (s_i - s_j)**2``.

    The full double sum visits every undirected edge twice, so half of it
    equals the quadratic form.
    """
    s = _single_channel(graph, signal)
    a = graph.to_dense()
    diff = s[:, None] - s[None, :]
    return float(0.5 * np.sum(a * diff * diff))


def class_indicators(labels, num_classes: int | None = None) -> np.ndarray:
    """``(n, C)`` matrix whose column ``c`` is the binary indicator of class ``c``."""
    y = np.asarray(labels)
    if y.ndim != 1:
        raise InvalidInput("labels must be a 1-D vector")
    y, c = as_labels(y, y.shape[0], num_classes)
    return (y[:, None] == np.arange(c)[None, :]).astype(np.float64)


def per_class_smoothness(graph: SparseGraph, labels, num_classes: int | None = None) -> np.ndarray:
    """``s_c^T L s_c`` for every class indicator ``s_c``.

    For a binary indicator the quadratic form is the total weight of edges
    leaving the class, which is what is summed here.
    """
    y, c = as_labels(labels, graph.n, num_classes)
    crossing = y[graph.rows] != y[graph.cols]
    out = np.zeros(c)
    np.add.at(out, y[graph.rows[crossing]], graph.weights[crossing])
    np.add.at(out, y[graph.cols[crossing]], graph.weights[crossing])
    return out


@dataclass(frozen=True)
class SmoothnessReport:
    per_class: np.ndarray
    total_raw: float
    normalized: float
    M: int
    C: int
    warnings: tuple[str, ...] = field(default=())


def label_smoothness(graph: SparseGraph, labels, num_classes: int | None = None) -> SmoothnessReport:
    """Sum of class-indicator smoothness, normalized by ``M**2 * C * (C - 1)``.

    ``M`` is the number of samples per class. With unbalanced classes it is
    taken as ``round(n / C)`` and ``"unbalanced-classes"`` is reported.
    The raw total is zero exactly when no edge joins two classes.
    """
    y, c = as_labels(labels, graph.n, num_classes)
    counts = np.bincount(y, minlength=c)
    if np.any(counts == 0):
        missing = [int(k) for k in np.flatnonzero(counts == 0)]
        raise InvalidInput(f"classes without samples: {missing}")
    warnings = []
    if np.all(counts == counts[0]):
        m = int(counts[0])
    else:
        m = int(round(graph.n / c))
        warnings.append("unbalanced-classes")

    per_class = per_class_smoothness(graph, y, c)
    total = float(per_class.sum())
    denom = m * m * c * (c - 1)
    normalized = total / denom if denom > 0 else 0.0
    return SmoothnessReport(per_class, total, normalized, m, c, tuple(warnings))


def smoothness_gap(graph_before: SparseGraph, graph_after: SparseGraph, labels,
                   num_classes: int | None = None) -> float:
    """``sum_c |sigma_after(s_c) - sigma_before(s_c)|`` over class indicators."""
    if graph_before.n != graph_after.n:
        raise InvalidInput(f"vertex counts differ: {graph_before.n} vs {graph_after.n}")
    before = per_class_smoothness(graph_before, labels, num_classes)
    after = per_class_smoothness(graph_after, labels, num_classes)
    return float(np.sum(np.abs(after - before)))


@dataclass(frozen=True)
class InfluenceScores:
    scores: np.ndarray
    filter_used: str


def margin_influence(graph: SparseGraph, signal, highpass: str = "laplacian-normalized",
                     tau: float = 0.5) -> InfluenceScores:
    """Per-vertex influence as the magnitude of a high-pass filtered signal.

    ``highpass="laplacian-normalized"`` applies ``L_norm``;
    ``highpass="spectral-complement"`` applies ``1 - simoncelli(tau)``
    exactly in the combinatorial Laplacian eigenbasis.
    """
    s = _single_channel(graph, signal)
    if highpass == "laplacian-normalized":
        out = normalized_laplacian(graph) @ s
        used = "normalized laplacian"
    elif highpass == "spectral-complement":
        out = apply_filter(graph, SpectralResponse(HighPass(Simoncelli(tau))), s)
        used = f"1 - simoncelli(tau={tau:g})"
    else:
        raise InvalidParameter(f"unknown high-pass {highpass!r}")
    return InfluenceScores(np.abs(out), used)
