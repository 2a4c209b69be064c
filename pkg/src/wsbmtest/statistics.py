"""Cycle-based test statistics and accept/reject decisions.

Every statistic here has the form ``cycle_sum(B, k) / sqrt(N_k * v^k)`` where
``B`` holds centered edge values with variance ``v`` under the null and
``N_k = C(n,k) (k-1)!/2`` is the number of k-cycles. Under H0 all of them are
asymptotically standard normal; large ``|stat|`` signals community structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .cycles import CycleSumMethod, cycle_sum, log_cycle_term_count
from .errors import DegenerateDichotomyError, DomainError, ZeroVarianceError
from .families import ExpFamilyModel, perturbation
from .graph import WeightedGraph, dichotomize
from .moments import _mean, combined_centered_matrix, moment_summary, single_centered_matrix
from .tracy_widom import tw1_critical, tw1_sf

NORMAL = "normal"
TW1 = "tw1"

_REL_ZERO = 1e-14


@dataclass
class TestReport:
    test: str
    statistic: float
    null: str
    critical: float
    p_value: float
    reject: bool
    gamma: float
    n: Optional[int] = None
    k: Optional[int] = None
    config: dict = field(default_factory=dict)

    __test__ = False   # not a pytest class

    def to_dict(self) -> dict:
        out = {"test": self.test, "n": self.n, "k": self.k}
        out.update(self.config)
        out.update(statistic=self.statistic, null=self.null, critical=self.critical,
                   p_value=self.p_value, reject=self.reject, gamma=self.gamma)
        return out


def _check_k(n: int, k: int):
    if k < 3:
        raise ValueError("cycle length k must be >= 3")
    if n < k:
        raise ValueError(f"need at least k={k} nodes, got n={n}")


def _normalize(numerator: float, n: int, k: int, variance: float) -> float:
    log_den = 0.5 * (log_cycle_term_count(n, k) + k * math.log(variance))
    return numerator * math.exp(-log_den)


def _require_variance(v: float, raw_second: float, what: str):
    if not v > _REL_ZERO * max(raw_second, 1e-300):
        raise ZeroVarianceError(f"{what}: edge weights have (numerically) zero variance; "
                                "the statistic is undefined")


def single_moment(g: WeightedGraph, l: int) -> tuple[float, float]:
    """Mean and population variance of ``A_ij^l`` over unordered pairs."""
    vals = g.upper_values() ** l
    mean = _mean(vals)
    c = vals - mean
    return mean, _mean(c * c)


def slmc_statistic(g: WeightedGraph, m: int = 2, k: int = 3,
                   method: CycleSumMethod | str = CycleSumMethod.AUTO) -> float:
    """Signed long mixture cycle statistic using the first ``m`` moments."""
    _check_k(g.n, k)
    summary = moment_summary(g, m)
    v = summary.total_variance
    _require_variance(v, v + float(np.sum(summary.means)) ** 2, "SLMC")
    b = combined_centered_matrix(g, m, summary.means)
    return _normalize(cycle_sum(b, k, method), g.n, k, v)


def slc_statistic(g: WeightedGraph, l: int = 1, k: int = 3,
                  method: CycleSumMethod | str = CycleSumMethod.AUTO) -> float:
    """Signed long cycle statistic on the single moment ``A_ij^l``."""
    _check_k(g.n, k)
    mean, v = single_moment(g, l)
    _require_variance(v, v + mean * mean, f"SLC({l})")
    b = single_centered_matrix(g, l, mean)
    return _normalize(cycle_sum(b, k, method), g.n, k, v)


def dichotomized_slc_statistic(g: WeightedGraph, t0: float, k: int = 3, p0: float | None = None,
                               method: CycleSumMethod | str = CycleSumMethod.AUTO) -> float:
    """Signed long cycle statistic of the graph thresholded at ``t0``.

    ``p0`` is the null edge probability. When omitted, the observed edge
    density of the thresholded graph is plugged in.
    """
    _check_k(g.n, k)
    a = dichotomize(g, t0)
    if p0 is None:
        p0 = _mean(a.upper_values())
    if not 0.0 < p0 < 1.0:
        raise DegenerateDichotomyError(f"edge probability {p0} after thresholding at {t0}; "
                                       "all weights fall on one side of the threshold")
    b = a.weights - p0
    np.fill_diagonal(b, 0.0)
    return _normalize(cycle_sum(b, k, method), g.n, k, p0 * (1.0 - p0))


def wslmc_statistic(g: WeightedGraph, fam: ExpFamilyModel, tau, d, k: int = 3,
                    method: CycleSumMethod | str = CycleSumMethod.AUTO) -> float:
    """Oracle statistic that knows the family, its null parameter and direction."""
    _check_k(g.n, k)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    td = perturbation(tau, d)
    q = float(td @ fam.d2psi(tau) @ td)
    if not q > 0.0:
        raise DomainError("the quadratic form tau_d' D2psi tau_d is zero; nothing to detect")
    e = (fam.T(g.weights) @ td - float(td @ fam.dpsi(tau))) / math.sqrt(g.n)
    np.fill_diagonal(e, 0.0)
    return cycle_sum(e, k, method) / math.sqrt(q ** k / (2 * k))


def normal_pvalue(statistic: float) -> float:
    return float(min(1.0, 2.0 * ndtr(-abs(statistic))))


def decide(statistic: float, null: str = NORMAL, gamma: float = 0.05, test: str = "",
           **echo) -> TestReport:
    """Two-sided normal or one-sided upper Tracy-Widom decision at level ``gamma``."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    n = echo.pop("n", None)
    k = echo.pop("k", None)
    if null == NORMAL:
        crit = float(-ndtri(gamma / 2.0))
        p = normal_pvalue(statistic)
        reject = abs(statistic) > crit
    elif null == TW1:
        crit = tw1_critical(gamma)
        p = tw1_sf(statistic)
        reject = statistic > crit
    else:
        raise ValueError(f"unknown null distribution {null!r}")
    return TestReport(test=test, statistic=float(statistic), null=null, critical=crit,
                      p_value=p, reject=bool(reject), gamma=gamma, n=n, k=k, config=echo)
