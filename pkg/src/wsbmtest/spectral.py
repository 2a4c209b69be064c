"""Largest-eigenvalue tests calibrated by the Tracy-Widom (beta=1) law.

The standardized matrix ``(A^l - mean) / sqrt(n var)`` (entrywise power,
zero diagonal) is a Wigner matrix under H0, so its top eigenvalue sits near
2 with TW1 fluctuations of order ``n^(-2/3)``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .errors import ZeroVarianceError
from .graph import WeightedGraph
from .moments import combined_centered_matrix, moment_summary, single_centered_matrix
from .statistics import _require_variance, single_moment
from .tracy_widom import tw1_critical  # noqa: F401  (re-exported)


def largest_eigenpair(m, tol: float = 1e-10) -> tuple[float, np.ndarray]:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("eigenvalues need a square matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    norm = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > 1e-9 * norm:
        raise ValueError("matrix is not symmetric")
    n = m.shape[0]
    # LAPACK syevr on the top index only; accurate to O(eps * ||M||)
    w, v = scipy.linalg.eigh(m, subset_by_index=[n - 1, n - 1], check_finite=False)
    return float(w[0]), v[:, 0]


def largest_eigenvalue(m, tol: float = 1e-10) -> float:
    return largest_eigenpair(m, tol)[0]


def _edge_statistic(b: np.ndarray, variance: float) -> float:
    n = b.shape[0]
    lam = largest_eigenvalue(b / math.sqrt(n * variance))
    return n ** (2.0 / 3.0) * (lam - 2.0)


def standardized_matrix(g: WeightedGraph, l: int) -> np.ndarray:
    mean, v = single_moment(g, l)
    _require_variance(v, v + mean * mean, f"spectral({l})")
    return single_centered_matrix(g, l, mean) / math.sqrt(g.n * v)


def spectral_statistic(g: WeightedGraph, l: int = 1) -> float:
    mean, v = single_moment(g, l)
    _require_variance(v, v + mean * mean, f"spectral({l})")
    return _edge_statistic(single_centered_matrix(g, l, mean), v)


def combined_spectral_statistic(g: WeightedGraph, m: int = 2) -> float:
    """Spectral statistic on the summed centered moments; known to be poorly calibrated."""
    if m == 1:
        return spectral_statistic(g, 1)
    summary = moment_summary(g, m)
    v = summary.total_variance
    _require_variance(v, v + float(np.sum(summary.means)) ** 2, "spectral combined")
    return _edge_statistic(combined_centered_matrix(g, m, summary.means), v)


__all__ = ["largest_eigenvalue", "largest_eigenpair", "spectral_statistic",
           "combined_spectral_statistic", "standardized_matrix", "tw1_critical",
           "ZeroVarianceError"]
