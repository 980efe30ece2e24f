"""Similarity graphs over feature matrices.

A graph is stored as an undirected edge list (each edge once, ``i < j``),
which makes symmetry, nonnegativity and the absence of self-loops hold by
construction. Dense and sparse adjacency views are derived on demand.

Functions
---------
knn_graph : k-nearest-neighbor graph from cosine or RBF similarities
threshold_topk : per-vertex top-k pruning of an existing graph
vbl_adjacency : composite GPS / frame-sequence / similarity graph
degrees, combinatorial_laplacian, normalized_laplacian, normalized_adjacency
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import pdist, squareform

from .errors import InvalidInput, InvalidParameter

SYMMETRIZE_MODES = ("union", "add-transpose")


def as_features(features, name: str = "features") -> np.ndarray:
    """Validate and return a finite 2-D float64 array with n, d >= 1."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidInput(f"{name} must be a non-empty 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput(f"{name} contains non-finite values")
    return x


def as_signal(signal, n: int, name: str = "signal") -> np.ndarray:
    """Validate a graph signal of length ``n`` (1-D) or shape ``(n, d)``."""
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim not in (1, 2) or s.shape[0] != n:
        raise InvalidInput(f"{name} has shape {s.shape}, expected ({n},) or ({n}, d)")
    if not np.all(np.isfinite(s)):
        raise InvalidInput(f"{name} contains non-finite values")
    return s


def as_labels(labels, n: int, num_classes: int | None) -> tuple[np.ndarray, int]:
    """Validate integer class labels; returns ``(labels, num_classes)``."""
    y = np.asarray(labels)
    if y.shape != (n,):
        raise InvalidInput(f"labels have shape {y.shape}, expected ({n},)")
    if n and (not np.issubdtype(y.dtype, np.integer)):
        if not np.all(y == np.round(y)):
            raise InvalidInput("labels must be integers")
        y = y.astype(np.int64)
    if n and y.min() < 0:
        raise InvalidInput("labels must be nonnegative")
    c = int(num_classes) if num_classes is not None else (int(y.max()) + 1 if n else 0)
    if c < 1:
        raise InvalidInput("at least one class is required")
    if n and y.max() >= c:
        raise InvalidInput(f"label {int(y.max())} out of range for {c} classes")
    return y.astype(np.int64), c


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Undirected weighted graph on ``n`` vertices.

    ``rows``, ``cols`` and ``weights`` hold every edge exactly once with
    ``rows < cols``, sorted lexicographically. Zero-weight edges are dropped.
    """

    n: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise InvalidInput("vertex count must be nonnegative")
        i = np.asarray(self.rows, dtype=np.int64).ravel()
        j = np.asarray(self.cols, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if not (i.shape == j.shape == w.shape):
            raise InvalidInput("rows, cols and weights must have equal length")
        if i.size:
            if i.min() < 0 or j.min() < 0 or i.max() >= n or j.max() >= n:
                raise InvalidInput("edge endpoint out of range")
            if np.any(i == j):
                raise InvalidInput("self-loops are not allowed")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidInput("edge weights must be finite and nonnegative")
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        # merge duplicates by summation, drop zeros, sort (i, j)
        coo = sp.coo_matrix((w, (lo, hi)), shape=(n, n))
        coo.sum_duplicates()
        keep = coo.data > 0
        lo, hi, w = coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64), coo.data[keep]
        order = np.lexsort((hi, lo))
        for name, arr in (("rows", lo[order]), ("cols", hi[order]), ("weights", w[order])):
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "SparseGraph":
        """Build from ``(i, j, w)`` triples; duplicate pairs are summed."""
        edges = list(edges)
        if not edges:
            return cls.empty(n)
        arr = np.asarray(edges, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidInput("edges must be (i, j, w) triples")
        ij = arr[:, :2]
        if np.any(ij != np.round(ij)):
            raise InvalidInput("edge endpoints must be integers")
        return cls(n, ij[:, 0].astype(np.int64), ij[:, 1].astype(np.int64), arr[:, 2])

    @classmethod
    def from_dense(cls, adjacency, atol: float = 0.0) -> "SparseGraph":
        """Build from a symmetric matrix; the diagonal must be zero."""
        a = np.asarray(adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput(f"adjacency must be square, got shape {a.shape}")
        if np.max(np.abs(a - a.T), initial=0.0) > atol:
            raise InvalidInput("adjacency is not symmetric")
        if np.any(np.diag(a) != 0):
            raise InvalidInput("adjacency has self-loops")
        i, j = np.nonzero(np.triu(a, 1))
        return cls(a.shape[0], i, j, a[i, j])

    @classmethod
    def empty(cls, n: int) -> "SparseGraph":
        z = np.zeros(0)
        return cls(n, z.astype(np.int64), z.astype(np.int64), z)

    @property
    def num_edges(self) -> int:
        return int(self.weights.size)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.rows, self.cols, self.weights)]

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse adjacency matrix."""
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.weights
        a[self.cols, self.rows] = self.weights
        return a

    def scaled(self, factor: float) -> "SparseGraph":
        if factor < 0:
            raise InvalidParameter("scale factor must be nonnegative")
        return SparseGraph(self.n, self.rows, self.cols, self.weights * factor)

    def __eq__(self, other):
        if not isinstance(other, SparseGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# pairwise similarities
# ---------------------------------------------------------------------------

def _mirror_upper(m: np.ndarray) -> np.ndarray:
    # BLAS products are not bitwise symmetric
    return np.triu(m) + np.triu(m, 1).T


def cosine_similarity(features) -> np.ndarray:
    """Pairwise cosine similarity; rows of norm zero have similarity 0."""
    x = as_features(features)
    gram = _mirror_upper(x @ x.T)
    sq = np.diag(gram).copy()
    zero = sq == 0
    # sqrt(g * g) == g exactly, so identical rows get cosine exactly 1
    with np.errstate(over="ignore"):
        denom = np.sqrt(np.outer(sq, sq))
    if not np.all(np.isfinite(denom)):
        root = np.sqrt(sq)
        denom = np.outer(root, root)
    s = np.divide(gram, denom, out=np.zeros_like(gram), where=denom > 0)
    s[zero, :] = 0.0
    s[:, zero] = 0.0
    np.clip(s, -1.0, 1.0, out=s)
    return s


def pairwise_distances(features, metric: str = "euclidean") -> np.ndarray:
    x = as_features(features)
    if metric == "euclidean":
        return squareform(pdist(x, "euclidean"))
    if metric == "cosine-distance":
        d = 1.0 - cosine_similarity(x)
        np.fill_diagonal(d, 0.0)
        return d
    raise InvalidParameter(f"unknown metric {metric!r}")


def similarity_matrix(features, kind: str = "cosine", alpha: float = 1.0,
                      metric: str = "euclidean") -> np.ndarray:
    """Dense nonnegative similarity matrix with a zero diagonal.

    ``kind="cosine"`` clamps negative cosines to 0. ``kind="rbf"`` uses
    ``exp(-alpha * dist)`` with ``metric`` either ``"euclidean"`` or
    ``"cosine-distance"``.
    """
    if kind == "cosine":
        s = np.maximum(cosine_similarity(features), 0.0)
    elif kind == "rbf":
        if not alpha >= 0:
            raise InvalidParameter("rbf alpha must be nonnegative")
        s = np.exp(-alpha * pairwise_distances(features, metric))
    else:
        raise InvalidParameter(f"unknown similarity kind {kind!r}")
    np.fill_diagonal(s, 0.0)
    return s


# ---------------------------------------------------------------------------
# sparsification
# ---------------------------------------------------------------------------

def _topk_mask(scores: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of each row's k largest finite entries.

    Ties go to the lower column index (stable sort). Entries equal to -inf
    are never selected, so rows with fewer candidates select fewer.
    """
    n = scores.shape[0]
    k = min(k, n)
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    mask = np.zeros(scores.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=1)
    mask &= np.isfinite(scores)
    return mask


def _symmetrize(weights: np.ndarray, mask: np.ndarray, mode: str) -> np.ndarray:
    if mode == "union":
        keep = mask | mask.T
        return np.where(keep, weights, 0.0)
    if mode == "add-transpose":
        w = np.where(mask, weights, 0.0)
        return w + w.T
    raise InvalidParameter(f"unknown symmetrize mode {mode!r}; expected one of {SYMMETRIZE_MODES}")


def knn_graph(features, k: int, kind: str = "cosine", alpha: float = 1.0,
              metric: str = "euclidean", symmetrize: str = "union") -> SparseGraph:
    """k-nearest-neighbor similarity graph.

    Every vertex selects its ``k`` most similar other vertices (ties to the
    lower index). The union of selections is kept with the similarity as
    weight, or, with ``symmetrize="add-transpose"``, the selected matrix is
    added to its transpose so that mutual selections count twice.
    """
    x = as_features(features)
    n = x.shape[0]
    if k < 1 or k >= n:
        raise InvalidParameter(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    s = similarity_matrix(x, kind=kind, alpha=alpha, metric=metric)
    scores = s.copy()
    np.fill_diagonal(scores, -np.inf)
    mask = _topk_mask(scores, k)
    return SparseGraph.from_dense(_symmetrize(s, mask, symmetrize))


def threshold_topk(graph: SparseGraph, k: int, symmetrize: str = "union") -> SparseGraph:
    """Keep, for every vertex, only its ``k`` heaviest incident edges."""
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    a = graph.to_dense()
    scores = np.where(a > 0, a, -np.inf)
    mask = _topk_mask(scores, k)
    return SparseGraph.from_dense(_symmetrize(a, mask, symmetrize))


# ---------------------------------------------------------------------------
# degree and Laplacian operators
# ---------------------------------------------------------------------------

def degrees(graph: SparseGraph) -> np.ndarray:
    d = np.zeros(graph.n)
    np.add.at(d, graph.rows, graph.weights)
    np.add.at(d, graph.cols, graph.weights)
    return d


def _inv_sqrt_degrees(graph: SparseGraph) -> np.ndarray:
    d = degrees(graph)
    out = np.zeros_like(d)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def combinatorial_laplacian(graph: SparseGraph) -> sp.csr_matrix:
    """L = D - A."""
    return (sp.diags(degrees(graph)) - graph.adjacency()).tocsr()


def normalized_laplacian(graph: SparseGraph) -> sp.csr_matrix:
    """D^-1/2 L D^-1/2; isolated vertices get an all-zero row and column."""
    q = sp.diags(_inv_sqrt_degrees(graph))
    return (q @ combinatorial_laplacian(graph) @ q).tocsr()


def normalized_adjacency(graph: SparseGraph) -> sp.csr_matrix:
    """E = D^-1/2 A D^-1/2 with the same zero-degree convention."""
    q = sp.diags(_inv_sqrt_degrees(graph))
    return (q @ graph.adjacency() @ q).tocsr()


# ---------------------------------------------------------------------------
# composite localization graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VblParams:
    """Parameters of the GPS + sequence + similarity adjacency.

    gamma : decay of the GPS term, 1/meters
    dist_max : GPS cutoff distance, meters
    betas : weight of frame offsets 1..len(betas)
    alpha_sim : scale of the gated cosine-similarity term
    """

    gamma: float
    dist_max: float
    betas: tuple[float, ...] = ()
    alpha_sim: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not self.gamma > 0 or not self.dist_max > 0:
            raise InvalidParameter("gamma and dist_max must be positive")
        if self.alpha_sim < 0 or any(b < 0 for b in self.betas):
            raise InvalidParameter("alpha_sim and betas must be nonnegative")


def vbl_adjacency(gps, frame_index, features, params: VblParams) -> SparseGraph:
    """Sum of a thresholded GPS kernel, a frame-offset term and a gated similarity.

    ``A_sim`` only contributes where the GPS or the sequence term is positive.
    """
    pos = np.asarray(gps, dtype=np.float64)
    frames = np.asarray(frame_index)
    x = as_features(features)
    n = x.shape[0]
    if pos.ndim != 2 or pos.shape != (n, 2) or frames.shape != (n,):
        raise InvalidInput("gps must be (n, 2) and frame_index (n,) with n = feature rows")
    if not np.all(np.isfinite(pos)):
        raise InvalidInput("gps contains non-finite values")
    if np.any(frames < 0) or not np.issubdtype(frames.dtype, np.integer):
        raise InvalidInput("frame indices must be nonnegative integers")

    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    a_dist = np.where(dist < params.dist_max, np.exp(-params.gamma * dist), 0.0)

    gap = np.abs(frames[:, None].astype(np.int64) - frames[None, :].astype(np.int64))
    a_seq = np.zeros((n, n))
    for k, beta in enumerate(params.betas, start=1):
        a_seq += beta * (gap == k)

    gate = (a_dist > 0) | (a_seq > 0)
    a_sim = np.where(gate, params.alpha_sim * np.maximum(cosine_similarity(x), 0.0), 0.0)

    a = a_dist + a_seq + a_sim
    np.fill_diagonal(a, 0.0)
    return SparseGraph.from_dense(a)
