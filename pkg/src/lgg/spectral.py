"""Graph Fourier transform and graph filters.

Three filter families are supported:

* a table of gains, one per Laplacian eigenvalue (:class:`SpectralTable`);
* a spectral response, a function of the eigenvalue (:class:`SpectralResponse`),
  applied exactly through the eigenbasis or approximately with a Chebyshev
  polynomial of the Laplacian;
* a polynomial of a diffusion operator (:class:`Diffusion`), applied by
  repeated sparse products without any eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import InvalidInput, InvalidParameter
from .graph import (
    SparseGraph,
    as_features,
    as_signal,
    combinatorial_laplacian,
    normalized_adjacency,
    normalized_laplacian,
)

LMAX_MARGIN = 1.01


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lmax(self) -> float:
        return float(self.eigenvalues[-1]) if self.n else 0.0


def _dense(matrix) -> np.ndarray:
    if sp.issparse(matrix):
        return matrix.toarray()
    return np.asarray(matrix, dtype=np.float64)


def eigendecompose(laplacian) -> LaplacianSpectrum:
    """Full eigendecomposition ``L = F diag(lam) F^T`` of a symmetric matrix.

    Each eigenvector is signed so that its entry of largest magnitude is
    positive (first such entry on ties). Bases inside repeated eigenspaces are
    not canonical.
    """
    m = _dense(laplacian)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix contains non-finite values")
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-10:
        raise InvalidInput("matrix is not symmetric")
    lam, f = np.linalg.eigh((m + m.T) / 2)
    if f.size:
        pivot = np.argmax(np.abs(f), axis=0)
        signs = np.sign(f[pivot, np.arange(f.shape[1])])
        signs[signs == 0] = 1.0
        f = f * signs
    return LaplacianSpectrum(lam, f)


def _check_spectrum_signal(spectrum: LaplacianSpectrum, signal, name: str) -> np.ndarray:
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim not in (1, 2) or s.shape[0] != spectrum.n:
        raise InvalidInput(f"{name} has shape {s.shape}, spectrum has n={spectrum.n}")
    return s


def gft(spectrum: LaplacianSpectrum, signal) -> np.ndarray:
    """Spectral coefficients ``F^T s`` (per channel for 2-D signals)."""
    s = _check_spectrum_signal(spectrum, signal, "signal")
    return spectrum.eigenvectors.T @ s


def igft(spectrum: LaplacianSpectrum, coeffs) -> np.ndarray:
    """Inverse transform ``F s_hat``."""
    c = _check_spectrum_signal(spectrum, coeffs, "coeffs")
    return spectrum.eigenvectors @ c


# ---------------------------------------------------------------------------
# spectral responses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Simoncelli:
    """Low-pass response: 1 below ``tau/2 * lmax``, 0 above ``tau * lmax``.

    Between the two cutoffs the gain rolls off as
    ``cos(pi/2 * log2(lam / (tau/2 * lmax))) ``, which is continuous at
    both ends.
    """

    tau: float = 0.5

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise InvalidParameter("simoncelli tau must lie in (0, 1]")

    def __call__(self, lam, lmax: float) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        if lmax <= 0:
            return np.ones_like(lam)
        ratio = lam / lmax
        low = self.tau / 2
        h = np.zeros_like(ratio)
        h[ratio <= low] = 1.0
        band = (ratio > low) & (ratio <= self.tau)
        h[band] = np.cos(np.pi / 2 * np.log(ratio[band] / low) / np.log(2.0))
        return h


@dataclass(frozen=True)
class Heat:
    """``exp(-scale * lam / lmax)``."""

    scale: float = 1.0

    def __call__(self, lam, lmax: float) -> np.ndarray:
        lam = np.asarray(lam, dtype=np.float64)
        return np.exp(-self.scale * lam / lmax) if lmax > 0 else np.ones_like(lam)


@dataclass(frozen=True)
class Polynomial:
    """``sum_k coeffs[k] * lam**k`` in the raw eigenvalue."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise InvalidParameter("polynomial needs at least one coefficient")

    def __call__(self, lam, lmax: float) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(lam, dtype=np.float64), self.coeffs)


@dataclass(frozen=True)
class HighPass:
    """Complement ``1 - h`` of another response."""

    inner: Callable

    def __call__(self, lam, lmax: float) -> np.ndarray:
        return 1.0 - self.inner(lam, lmax)


# ---------------------------------------------------------------------------
# filter specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralTable:
    """One gain per eigenvalue, in ascending eigenvalue order."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.float64).ravel()
        if not np.all(np.isfinite(g)):
            raise InvalidParameter("table gains must be finite")
        object.__setattr__(self, "gains", g)


@dataclass(frozen=True)
class SpectralResponse:
    """A response ``h(lam, lmax)`` such as :class:`Simoncelli`."""

    response: Callable


DIFFUSION_OPERATORS = ("combinatorial", "normalized", "adjacency-normalized")


@dataclass(frozen=True)
class Diffusion:
    """``S^m`` with ``S = I - a L``, ``I - a L_norm`` or ``a I + E``."""

    a: float
    m: int
    operator: str = "normalized"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise InvalidParameter("diffusion power m must be a nonnegative integer")
        if self.operator not in DIFFUSION_OPERATORS:
            raise InvalidParameter(f"unknown diffusion operator {self.operator!r}")


FilterSpec = Union[SpectralTable, SpectralResponse, Diffusion]


# ---------------------------------------------------------------------------
# spectral-radius estimates
# ---------------------------------------------------------------------------

def power_iteration(operator, steps: int = 50, seed: int = 0) -> float:
    """Estimate of the spectral radius of a symmetric operator.

    Returns ``||S x|| / ||x||`` after ``steps`` normalized iterations. This
    never exceeds the true spectral radius.
    """
    n = operator.shape[0]
    if n == 0:
        return 0.0
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(steps):
        y = operator @ x
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
    return est


def largest_eigenvalue(operator, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite operator."""
    n = operator.shape[0]
    if n == 0:
        return 0.0
    if n <= 32:
        return float(np.linalg.eigvalsh(_dense(operator))[-1])
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        val = eigsh(sp.csr_matrix(operator), k=1, which="LA", v0=v0,
                    return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        if exc.eigenvalues is None or not len(exc.eigenvalues):
            return float(np.linalg.eigvalsh(_dense(operator))[-1])
        val = exc.eigenvalues
    return float(np.max(val))


def laplacian_operator(graph: SparseGraph, laplacian: str = "combinatorial") -> sp.csr_matrix:
    if laplacian == "combinatorial":
        return combinatorial_laplacian(graph)
    if laplacian == "normalized":
        return normalized_laplacian(graph)
    raise InvalidParameter(f"unknown laplacian {laplacian!r}")


# ---------------------------------------------------------------------------
# Chebyshev approximation
# ---------------------------------------------------------------------------

def chebyshev_coefficients(func: Callable[[np.ndarray], np.ndarray], upper: float,
                           order: int, num_points: int | None = None) -> np.ndarray:
    """Coefficients of the order-``order`` Chebyshev expansion of ``func`` on ``[0, upper]``.

    Uses Gauss-Chebyshev quadrature with ``num_points`` nodes (default:
    ``max(1000, 4 * (order + 1))``). The constant term is stored halved, so
    that ``p(x) = sum_k c[k] T_k(x)``.
    """
    if order < 0:
        raise InvalidParameter("chebyshev order must be >= 0")
    npts = num_points or max(1000, 4 * (order + 1))
    theta = np.pi * (np.arange(npts) + 0.5) / npts
    values = func(upper / 2 * (np.cos(theta) + 1.0))
    c = 2.0 / npts * (np.cos(np.outer(np.arange(order + 1), theta)) @ values)
    c[0] /= 2
    return c


def chebyshev_apply(operator, coeffs: np.ndarray, upper: float, signal) -> np.ndarray:
    """Evaluate ``sum_k c[k] T_k(2 L / upper - I) s`` by the three-term recurrence."""
    s = np.asarray(signal, dtype=np.float64)
    if upper <= 0:
        # operator is zero: every T_k(-I) s equals (-1)^k s
        return s * np.sum(coeffs * (-1.0) ** np.arange(len(coeffs)))

    def shifted(v):
        return (2.0 / upper) * (operator @ v) - v

    t_prev = s
    out = coeffs[0] * t_prev
    if len(coeffs) == 1:
        return out
    t_cur = shifted(s)
    out = out + coeffs[1] * t_cur
    for c in coeffs[2:]:
        t_prev, t_cur = t_cur, 2.0 * shifted(t_cur) - t_prev
        out = out + c * t_cur
    return out


# ---------------------------------------------------------------------------
# filtering
# ---------------------------------------------------------------------------

def _diffusion_operator(graph: SparseGraph, spec: Diffusion) -> sp.csr_matrix:
    eye = sp.identity(graph.n, format="csr")
    if spec.operator == "combinatorial":
        return (eye - spec.a * combinatorial_laplacian(graph)).tocsr()
    if spec.operator == "normalized":
        return (eye - spec.a * normalized_laplacian(graph)).tocsr()
    return (spec.a * eye + normalized_adjacency(graph)).tocsr()


def _repeat(operator, m: int, signal: np.ndarray) -> np.ndarray:
    out = signal.copy()
    for _ in range(int(m)):
        out = operator @ out
    return out


def apply_filter(graph: SparseGraph, spec: FilterSpec, signal, method: str = "exact",
                 order: int = 30, laplacian: str = "combinatorial",
                 lmax: float | None = None,
                 spectrum: LaplacianSpectrum | None = None) -> np.ndarray:
    """Filter a graph signal.

    Parameters
    ----------
    graph : SparseGraph
    spec : SpectralTable, SpectralResponse or Diffusion
    signal : array of shape (n,) or (n, d)
    method : ``"exact"`` (eigenbasis) or ``"chebyshev"``; only spectral
        responses may be approximated. Ignored for diffusion filters.
    order : Chebyshev order.
    laplacian : ``"combinatorial"`` or ``"normalized"``, the operator whose
        spectrum defines frequencies.
    lmax : normalization of the response. Defaults to the largest
        eigenvalue of the Laplacian. The Chebyshev domain is ``[0, 1.01 * lmax]``.
    spectrum : precomputed eigendecomposition to reuse for the exact path.

    Returns
    -------
    np.ndarray with the shape of ``signal``.
    """
    s = as_signal(signal, graph.n)

    if isinstance(spec, Diffusion):
        return _repeat(_diffusion_operator(graph, spec), spec.m, s)

    if not isinstance(spec, (SpectralTable, SpectralResponse)):
        raise InvalidParameter(f"unsupported filter spec {spec!r}")
    if method not in ("exact", "chebyshev"):
        raise InvalidParameter(f"unknown method {method!r}")

    op = laplacian_operator(graph, laplacian)

    if method == "chebyshev":
        if not isinstance(spec, SpectralResponse):
            raise InvalidParameter("chebyshev approximation requires a spectral response")
        top = largest_eigenvalue(op) if lmax is None else float(lmax)
        upper = LMAX_MARGIN * top
        coeffs = chebyshev_coefficients(lambda lam: spec.response(lam, top), upper, order)
        return chebyshev_apply(op, coeffs, upper, s)

    spec_ = spectrum if spectrum is not None else eigendecompose(op)
    if spec_.n != graph.n:
        raise InvalidInput("spectrum does not match graph size")
    if isinstance(spec, SpectralTable):
        if spec.gains.shape[0] != graph.n:
            raise InvalidParameter(f"table has {spec.gains.shape[0]} gains for n={graph.n}")
        gains = spec.gains
    else:
        top = spec_.lmax if lmax is None else float(lmax)
        gains = spec.response(spec_.eigenvalues, top)
    coeffs = gft(spec_, s)
    coeffs = gains[:, None] * coeffs if coeffs.ndim == 2 else gains * coeffs
    return igft(spec_, coeffs)


def vbl_lowpass(graph: SparseGraph, a: float, m: int, signal) -> np.ndarray:
    """``(I - a L_norm)^m s``; ``m = 0`` returns the signal unchanged."""
    return apply_filter(graph, Diffusion(a, m, "normalized"), signal)


def sgc_diffuse(features, graph: SparseGraph, alpha: float, m: int) -> np.ndarray:
    """``(alpha I + E)^m F`` with ``E`` the normalized adjacency."""
    x = as_features(features)
    if x.shape[0] != graph.n:
        raise InvalidInput(f"features have {x.shape[0]} rows, graph has {graph.n} vertices")
    return apply_filter(graph, Diffusion(alpha, m, "adjacency-normalized"), x)
