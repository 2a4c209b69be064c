"""Detection boundaries, information loss from thresholding, and
likelihood-ratio second moments for exponential-family block models.

Weights follow ``theta = tau -/+ tau_d / sqrt(n)`` for same/different-label
pairs, ``tau_d = tau * d`` componentwise. The *weighted radius*
``tau_d' D2psi(tau) tau_d`` decides detectability: below 1 no test is
consistent, above 1 the oracle cycle test is.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, logsumexp

from .errors import DegenerateDichotomyError, DomainError, QuadratureError
from .families import ExpFamilyModel, perturbation
from .rng import stream

UNDETECTABLE = "undetectable"
BOUNDARY = "boundary"
DETECTABLE = "detectable"


@dataclass(frozen=True)
class RegimeClassification:
    radius: float
    regime: str
    tol: float = 1e-9


def classify_regime(radius: float, tol: float = 1e-9) -> RegimeClassification:
    if radius < 0 or math.isnan(radius):
        raise ValueError(f"radius must be non-negative, got {radius}")
    if radius < 1 - tol:
        regime = UNDETECTABLE
    elif radius > 1 + tol:
        regime = DETECTABLE
    else:
        regime = BOUNDARY
    return RegimeClassification(radius, regime, tol)


def radius_weighted(fam: ExpFamilyModel, tau, d) -> float:
    td = perturbation(tau, d)
    return float(td @ fam.d2psi(tau) @ td)


# ---------------------------------------------------------------------------
# thresholded networks


@dataclass(frozen=True)
class DichotomyQuantities:
    p0: float           # null probability that a weight exceeds t0
    a: np.ndarray       # int_{t0}^inf f(x; tau) (Dpsi(tau) - T(x)) dx
    t0: float


def _check_p0(p0: float, t0: float, tol: float = 1e-12) -> None:
    if not tol < p0 < 1 - tol:
        raise DegenerateDichotomyError(
            f"threshold t0={t0} gives edge probability {p0}; weights never fall on both sides")


def _exponential_closed_form(tau: float, t0: float) -> DichotomyQuantities:
    if t0 <= 0:
        _check_p0(1.0, t0)
    p0 = math.exp(-tau * t0)
    _check_p0(p0, t0)
    return DichotomyQuantities(p0=p0, a=np.array([t0 * p0]), t0=t0)


def _quad(f, lo, hi, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{what}: {exc}") from None
    if err > 1e-10:
        raise QuadratureError(f"{what}: error estimate {err:.2e} exceeds 1e-10")
    return val


def dichotomized_quantities(fam: ExpFamilyModel, tau, t0: float,
                            method: str = "auto") -> DichotomyQuantities:
    """``p0`` and ``a(t0)`` by closed form (exponential) or adaptive quadrature.

    ``method`` is ``"auto"``, ``"closed"`` or ``"quadrature"``.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    fam._theta(tau)
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "closed") and fam.name == "exponential":
        return _exponential_closed_form(float(tau[0]), float(t0))
    if method == "closed":
        raise ValueError(f"no closed form for family {fam.name!r}")

    lo = max(float(t0), fam.support[0])
    hi = fam.support[1]
    if lo >= hi:
        _check_p0(0.0, t0)
    dpsi = fam.dpsi(tau)
    dens = lambda x: float(fam.density(np.array([x]), tau)[0])
    p0 = _quad(dens, lo, hi, "p0")
    _check_p0(p0, t0)
    a = np.array([
        _quad(lambda x, j=j: dens(x) * (dpsi[j] - fam.T(np.array([x]))[0, j]), lo, hi, f"a[{j}]")
        for j in range(fam.dim)])
    return DichotomyQuantities(p0=p0, a=a, t0=float(t0))


def radius_dichotomized(fam: ExpFamilyModel, tau, d, t0: float, method: str = "auto") -> float:
    q = dichotomized_quantities(fam, tau, t0, method)
    proj = float(q.a @ perturbation(tau, d))
    return proj * proj / (q.p0 * (1.0 - q.p0))


def loss_factor(x: float) -> float:
    """``(e^x - 1)/x^2``: weighted over thresholded radius for exponential weights at ``x = tau t0``."""
    return math.expm1(x) / (x * x)


def optimal_threshold_exponential(tau: float) -> tuple[float, float]:
    """Threshold minimizing information loss for exponential(tau) weights.

    Returns ``(t0_star, loss_factor(tau t0_star))``. The minimizer solves
    ``(x - 2) e^x + 2 = 0``, the stationarity condition of ``loss_factor``.
    """
    if not tau > 0:
        raise DomainError(f"exponential rate must be positive, got {tau}")
    x = optimize.brentq(lambda x: (x - 2.0) * math.exp(x) + 2.0, 1.0, 2.0, xtol=1e-14)
    return x / tau, loss_factor(x)


@dataclass(frozen=True)
class InformationLoss:
    weighted_radius: float
    dichotomized_radius: float
    ratio: float          # weighted / dichotomized; nan when undefined
    flag: str = ""        # "", "zero-direction" or "orthogonal"


def information_loss(fam: ExpFamilyModel, tau, d, t0: float, method: str = "auto") -> InformationLoss:
    w = radius_weighted(fam, tau, d)
    r = radius_dichotomized(fam, tau, d, t0, method)
    if r > 0:
        return InformationLoss(w, r, w / r)
    flag = "zero-direction" if not np.any(np.asarray(d, dtype=float)) else "orthogonal"
    return InformationLoss(w, r, math.nan, flag)


# ---------------------------------------------------------------------------
# contiguity and the likelihood-ratio second moment


def ode_residual(fam: ExpFamilyModel, tau, d) -> float:
    """``c2^2 + 3 c4`` with ``c_k = sum_{|alpha|=k} d^alpha psi(tau) tau_d^alpha / alpha!``.

    Zero means the quartic correction in the second moment of the likelihood
    ratio matches that of a cycle-count Gaussian limit.
    """
    c = fam.taylor(tau, perturbation(tau, d), 4)
    return float(c[2] ** 2 + 3.0 * c[4])


def second_moment_limit(fam: ExpFamilyModel, tau, d) -> float:
    """Large-n limit of ``E[L_n^2]`` under H0; finite only below the boundary."""
    t = radius_weighted(fam, tau, d)
    if t >= 1.0:
        raise DomainError(f"weighted radius {t} >= 1: the second moment diverges")
    c = fam.taylor(tau, perturbation(tau, d), 4)
    return math.exp(-c[2] + 3.0 * c[4]) / math.sqrt(1.0 - t)


@dataclass(frozen=True)
class _PairTerms:
    same_plus: float     # both label products +1
    same_minus: float    # both -1
    mixed: float
    n: int

    @property
    def pairs(self) -> float:
        return self.n * (self.n - 1) / 2.0

    def log_value(self, r2, ss2, se2):
        """Log of the product over pairs given R^2, (sum sigma)^2, (sum eta)^2."""
        n = self.n
        cross = (np.asarray(ss2, dtype=float) - n) / 2.0 + (np.asarray(se2, dtype=float) - n) / 2.0
        joint = (np.asarray(r2, dtype=float) - n) / 2.0
        n_pp = (self.pairs + cross + joint) / 4.0
        n_mm = (self.pairs - cross + joint) / 4.0
        n_mix = self.pairs - n_pp - n_mm
        return n_pp * self.same_plus + n_mm * self.same_minus + n_mix * self.mixed


def _pair_terms(fam: ExpFamilyModel, tau, d, n: int) -> _PairTerms:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    x = perturbation(tau, d) / math.sqrt(n)
    psi = fam.psi
    p0, pm, pp = psi(tau), psi(tau - x), psi(tau + x)
    return _PairTerms(
        same_plus=psi(tau - 2 * x) - 2 * pm + p0,
        same_minus=psi(tau + 2 * x) - 2 * pp + p0,
        mixed=2 * p0 - pm - pp,
        n=n,
    )


def pair_log_factor(fam: ExpFamilyModel, tau, d, n: int, s: int, e: int) -> float:
    """Log of one pair's factor in ``E[L_n^2]`` for label products ``s``, ``e``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    x = perturbation(tau, d) / math.sqrt(n)
    th_s, th_e = tau - s * x, tau - e * x
    return fam.psi(th_s + th_e - tau) - fam.psi(th_s) - fam.psi(th_e) + fam.psi(tau)


def _log_binom_pmf(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) - n * math.log(2.0)


def second_moment_exact(fam: ExpFamilyModel, tau, d, n: int) -> float:
    """``E[L_n^2]`` summed exactly over all label pairs in O(n^2).

    With ``xi = sigma * eta`` and ``K`` the number of ``xi_i = +1``: R = 2K - n,
    sum(sigma) = P + M and sum(eta) = P - M, where P and M are the label sums
    over the two halves. Given K, P and M are independent centered binomials.
    """
    terms = _pair_terms(fam, tau, d, n)
    c0 = float(terms.log_value(0.0, 0.0, 0.0))
    a_r = float(terms.log_value(1.0, 0.0, 0.0)) - c0
    a_s = float(terms.log_value(0.0, 1.0, 0.0)) - c0   # same for eta by symmetry

    def log_mgf_sq(size: int) -> float:
        # log E exp(2 a_s P^2), P = 2B - size, B ~ Bin(size, 1/2)
        p = 2.0 * np.arange(size + 1) - size
        return float(logsumexp(_log_binom_pmf(size) + 2.0 * a_s * p * p))

    side = [log_mgf_sq(s) for s in range(n + 1)]
    k = np.arange(n + 1)
    r = 2.0 * k - n
    logs = _log_binom_pmf(n) + a_r * r * r + np.array([side[j] + side[n - j] for j in k])
    return math.exp(c0 + float(logsumexp(logs)))


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    se: float
    reps: int


LOG_OVERFLOW = 700.0


def _mc_block(terms: _PairTerms, a_s: float, seed: int, block: int, size: int, control: bool):
    rng = stream(seed, block)
    n = terms.n
    sigma = rng.integers(0, 2, size=(size, n), dtype=np.int8) * 2 - 1
    eta = rng.integers(0, 2, size=(size, n), dtype=np.int8) * 2 - 1
    r2 = (sigma * eta).sum(axis=1, dtype=np.int64).astype(float) ** 2
    ss2 = sigma.sum(axis=1, dtype=np.int64).astype(float) ** 2
    se2 = eta.sum(axis=1, dtype=np.int64).astype(float) ** 2
    logv = terms.log_value(r2, ss2, se2)
    if np.max(logv) > LOG_OVERFLOW:
        raise OverflowError(f"replicate log-likelihood-ratio product {np.max(logv):.1f} exceeds "
                            f"{LOG_OVERFLOW}; the second moment is dominated by rare labelings")
    y = np.exp(logv)
    if control:
        base = np.exp(terms.log_value(r2, float(n), float(n)))
        y = y - base * (1.0 + a_s * (ss2 + se2 - 2.0 * n))
    return y


def second_moment_mc(fam: ExpFamilyModel, tau, d, n: int, reps: int, seed: int = 0,
                     control_variate: bool = False, block_size: int = 4096,
                     workers: int = 1) -> MCEstimate:
    """Monte-Carlo ``E[L_n^2]`` over independent uniform label pairs.

    Each replicate is the exact product of the per-pair factors over all
    C(n,2) pairs. Pairs with the same label products share one factor, so
    the product is accumulated in log space from the three class counts.

    With ``control_variate`` each replicate is paired with its first-order
    expansion in ``sum(sigma)^2`` and ``sum(eta)^2`` about their conditional
    mean ``n`` given ``R = sum(sigma * eta)``. That expansion's expectation
    is a binomial sum over R, evaluated exactly. The estimator stays
    unbiased while the dominant R-driven variance cancels.

    Stream ``(seed, block)`` drives block ``block`` of ``block_size``
    replicates, so results do not depend on ``workers``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if n > 1000:
        raise ValueError("n > 1000 is outside the practical range of this estimator")
    terms = _pair_terms(fam, tau, d, n)
    if terms.same_plus == terms.same_minus == terms.mixed == 0.0:
        control_variate = False   # every replicate is exactly 1
    a_s = float(terms.log_value(0.0, 1.0, 0.0) - terms.log_value(0.0, 0.0, 0.0))
    sizes = [min(block_size, reps - b * block_size) for b in range(-(-reps // block_size))]
    job = lambda b: _mc_block(terms, a_s, seed, b, sizes[b], control_variate)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    y = np.concatenate(parts)
    mean = math.fsum(y) / reps
    if control_variate:
        r = 2.0 * np.arange(n + 1) - n
        logs = _log_binom_pmf(n) + terms.log_value(r * r, float(n), float(n))
        mean += math.exp(float(logsumexp(logs)))
    se = float(np.std(y, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return MCEstimate(mean=mean, se=se, reps=reps)
