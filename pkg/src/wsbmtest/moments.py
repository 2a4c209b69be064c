"""Empirical edge-weight moments and the centered matrices fed to cycle sums.

All averages run over the C(n,2) unordered pairs and are normalized by
C(n,2) (no degrees-of-freedom correction). Sums use ``math.fsum`` so the
result is correctly rounded and independent of any evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph


@dataclass(frozen=True)
class MomentSummary:
    means: np.ndarray       # (m,)  average of A_ij^t, t = 1..m
    cov: np.ndarray         # (m, m) population covariance of (A_ij, ..., A_ij^m)

    @property
    def m(self) -> int:
        return len(self.means)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.cov).copy()

    @property
    def total_variance(self) -> float:
        """``1^T S^2 1``: variance of the summed moments sum_t A_ij^t."""
        return math.fsum(self.cov.ravel())


def _powers(values: np.ndarray, m: int) -> list[np.ndarray]:
    out = [values]
    for _ in range(1, m):
        out.append(out[-1] * values)
    return out


def _mean(x: np.ndarray) -> float:
    return math.fsum(x) / x.size


def edge_moment_means(g: WeightedGraph, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.array([_mean(p) for p in _powers(g.upper_values(), m)])


def sample_covariance(g: WeightedGraph, m: int) -> np.ndarray:
    return moment_summary(g, m).cov


def moment_summary(g: WeightedGraph, m: int) -> MomentSummary:
    if m < 1:
        raise ValueError("m must be >= 1")
    powers = _powers(g.upper_values(), m)
    means = np.array([_mean(p) for p in powers])
    centered = [p - mu for p, mu in zip(powers, means)]
    cov = np.empty((m, m))
    for a in range(m):
        for b in range(a, m):
            cov[a, b] = cov[b, a] = _mean(centered[a] * centered[b])
    return MomentSummary(means=means, cov=cov)


def single_centered_matrix(g: WeightedGraph, l: int, mean: float | None = None) -> np.ndarray:
    """``A_ij^l - mean(A^l)`` off the diagonal, zero on it."""
    if l < 1:
        raise ValueError("l must be >= 1")
    if mean is None:
        mean = edge_moment_means(g, l)[l - 1]
    b = g.weights ** l - mean
    np.fill_diagonal(b, 0.0)
    return b


def combined_centered_matrix(g: WeightedGraph, m: int, means=None) -> np.ndarray:
    """``sum_t (A_ij^t - mean(A^t))`` for t = 1..m, zero diagonal."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if means is None:
        means = edge_moment_means(g, m)
    w = g.weights
    b = np.zeros_like(w)
    p = np.ones_like(w)
    for t in range(m):
        p = p * w
        b += p - means[t]
    np.fill_diagonal(b, 0.0)
    return b
