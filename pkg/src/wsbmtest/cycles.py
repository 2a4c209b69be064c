"""Sums over undirected k-cycles of products of edge values.

For a symmetric zero-diagonal matrix B the cycle sum is

    sum over node sets {i_1 < ... < i_k}, over the (k-1)!/2 distinct
    undirected cyclic orderings of the set, of prod_t B[i_t, i_{t+1}].

Enumeration is exact for any k but costs O(n^k). For k = 3 and k = 4 the sum
is recovered from closed-walk counts in O(n^3).
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings

import numpy as np

BRUTE_FORCE_TERM_LIMIT = 10**9


class CycleSumMethod(enum.Enum):
    BRUTE_FORCE = "bruteforce"
    TRACE3 = "trace3"
    TRACE4 = "trace4"
    AUTO = "auto"


def cycle_term_count(n: int, k: int) -> int:
    """Number of undirected k-cycles on n labelled nodes."""
    return math.comb(n, k) * math.factorial(k - 1) // 2


def log_cycle_term_count(n: int, k: int) -> float:
    """``log(C(n,k) (k-1)!/2)`` via log-gamma; safe for huge n."""
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + math.lgamma(k) - math.log(2.0))


def _check(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("cycle sums need a square matrix")
    if np.any(np.diag(b) != 0):
        raise ValueError("cycle sums need a zero diagonal")
    if not np.allclose(b, b.T, rtol=1e-12, atol=0):
        raise ValueError("cycle sums need a symmetric matrix")
    return b


def _cyclic_orders(k: int):
    # Fix the smallest position first; drop mirror images by requiring
    # the second element to precede the last in the remaining order.
    for rest in itertools.permutations(range(1, k)):
        if rest[0] < rest[-1]:
            yield (0,) + rest


def cycle_sum_bruteforce(b, k: int, count_only: bool = False):
    """Enumerate every undirected k-cycle.

    With ``count_only`` the number of enumerated terms is returned instead
    of the sum; it always equals ``cycle_term_count(n, k)``.
    """
    b = _check(b)
    n = b.shape[0]
    if k < 3:
        raise ValueError("cycle length k must be >= 3")
    if k > n:
        raise ValueError(f"cycle length k={k} exceeds node count n={n}")
    orders = list(_cyclic_orders(k))
    terms = 0
    total = 0.0
    for nodes in itertools.combinations(range(n), k):
        for order in orders:
            path = [nodes[p] for p in order]
            terms += 1
            if count_only:
                continue
            prod = 1.0
            for t in range(k):
                prod *= b[path[t], path[(t + 1) % k]]
            total += prod
    return terms if count_only else total


def cycle_sum_trace3(b) -> float:
    """``tr(B^3)/6``; each triangle is traversed by 6 closed walks."""
    b = _check(b)
    return float(np.sum(b * (b @ b))) / 6.0


def cycle_sum_trace4(b) -> float:
    """4-cycle sum from ``tr(B^4)`` minus the degenerate closed 4-walks.

    Closed 4-walks that are not 4-cycles either go out and back along two
    edges at a common vertex (``sum_i r_i^2`` with ``r_i = sum_j B_ij^2``,
    which double counts the single-edge walks) or traverse one edge four
    times (``Q = sum_{i != j} B_ij^4``).
    """
    b = _check(b)
    b2 = b @ b
    sq = b * b
    tr4 = float(np.sum(b2 * b2))
    r = sq.sum(axis=1)
    q = float(np.sum(sq * sq))
    return (tr4 - 2.0 * float(np.dot(r, r)) + q) / 8.0


def cycle_sum(b, k: int = 3, method: CycleSumMethod | str = CycleSumMethod.AUTO) -> float:
    method = CycleSumMethod(method)
    b = _check(b)
    n = b.shape[0]
    if k < 3:
        raise ValueError("cycle length k must be >= 3")
    if k > n:
        raise ValueError(f"cycle length k={k} exceeds node count n={n}")
    if method is CycleSumMethod.AUTO:
        method = {3: CycleSumMethod.TRACE3, 4: CycleSumMethod.TRACE4}.get(k, CycleSumMethod.BRUTE_FORCE)
    if method is CycleSumMethod.TRACE3:
        if k != 3:
            raise ValueError("trace3 only computes 3-cycles")
        return cycle_sum_trace3(b)
    if method is CycleSumMethod.TRACE4:
        if k != 4:
            raise ValueError("trace4 only computes 4-cycles")
        return cycle_sum_trace4(b)
    if k >= 5 and cycle_term_count(n, k) > BRUTE_FORCE_TERM_LIMIT:
        warnings.warn(
            f"enumerating {cycle_term_count(n, k):.3g} {k}-cycles on {n} nodes; this will be slow",
            RuntimeWarning, stacklevel=2)
    return cycle_sum_bruteforce(b, k)
