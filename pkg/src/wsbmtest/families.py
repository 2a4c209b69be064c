"""Exponential-family weight models and moment-parameterized samplers.

An :class:`ExpFamilyModel` has density ``h(x) exp(theta . T(x) - psi(theta))``.
Its gradient and Hessian of ``psi`` are the mean and covariance of ``T(X)``.
Builtin families supply exact derivatives. A user-defined family may give
only ``psi`` and fall back to finite differences.

A :class:`MomentFamily` is indexed by its first two raw moments. The
simulator uses it to draw weights whose moments follow a block design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

# ---------------------------------------------------------------------------
# numeric differentiation fallbacks


def _numeric_grad(psi, theta, h=1e-5):
    theta = np.asarray(theta, dtype=float)
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h * max(1.0, abs(theta[i]))
        g[i] = (psi(theta + e) - psi(theta - e)) / (2 * e[i])
    return g


def _numeric_hess(psi, theta, h=1e-4):
    theta = np.asarray(theta, dtype=float)
    m = theta.size
    steps = h * np.maximum(1.0, np.abs(theta))
    H = np.empty((m, m))
    f0 = psi(theta)
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = steps[i]
        H[i, i] = (psi(theta + ei) - 2 * f0 + psi(theta - ei)) / steps[i] ** 2
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = steps[j]
            H[i, j] = H[j, i] = (psi(theta + ei + ej) - psi(theta + ei - ej)
                                 - psi(theta - ei + ej) + psi(theta - ei - ej)) / (4 * steps[i] * steps[j])
    return H


# central-difference stencils for derivatives of order 0..4
_STENCILS = {
    1: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2, -1, 1, 2]), np.array([-0.5, 1.0, -1.0, 0.5])),
    4: (np.array([-2, -1, 0, 1, 2]), np.array([1.0, -4.0, 6.0, -4.0, 1.0])),
}


def _numeric_taylor(psi, theta, direction, order, step):
    """Taylor coefficients of s -> psi(theta + s*direction) by Richardson-extrapolated differences."""
    theta = np.asarray(theta, dtype=float)
    direction = np.asarray(direction, dtype=float)
    g = lambda s: psi(theta + s * direction)
    coeffs = [g(0.0)]
    for k in range(1, order + 1):
        offsets, weights = _STENCILS[k]

        def diff(h):
            return sum(w * g(o * h) for o, w in zip(offsets, weights)) / h ** k

        coarse, fine = diff(step), diff(step / 2)
        coeffs.append((4 * fine - coarse) / 3 / math.factorial(k))
    return np.array(coeffs)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpFamilyModel:
    """A finite-dimensional exponential family on the real line.

    ``taylor(theta, u, order)`` returns ``c_0..c_order`` with
    ``psi(theta + s u) = sum_k c_k s^k + O(s^(order+1))``; equivalently
    ``c_k = sum_{|alpha|=k} d^alpha psi(theta) u^alpha / alpha!``.
    """

    name: str
    dim: int
    suff_stats: Callable[[np.ndarray], np.ndarray]     # x (N,) -> (N, dim)
    log_partition: Callable[[np.ndarray], float]
    in_domain: Callable[[np.ndarray], bool]
    sampler: Optional[Callable] = None                  # (theta, rng, size) -> (size,)
    log_base: Optional[Callable[[np.ndarray], np.ndarray]] = None   # log h(x)
    support: tuple = (-np.inf, np.inf)
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    taylor_fn: Optional[Callable] = None
    taylor_step: float = 1e-2

    def _theta(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            raise ValueError(f"{self.name}: expected a parameter of length {self.dim}, got {theta.shape}")
        if not self.in_domain(theta):
            raise DomainError(f"{self.name}: parameter {theta.tolist()} outside the natural domain")
        return theta

    def psi(self, theta) -> float:
        return float(self.log_partition(self._theta(theta)))

    def dpsi(self, theta) -> np.ndarray:
        theta = self._theta(theta)
        if self.grad is not None:
            return np.atleast_1d(np.asarray(self.grad(theta), dtype=float))
        return _numeric_grad(self.log_partition, theta)

    def d2psi(self, theta) -> np.ndarray:
        theta = self._theta(theta)
        if self.hess is not None:
            return np.atleast_2d(np.asarray(self.hess(theta), dtype=float))
        return _numeric_hess(self.log_partition, theta)

    def taylor(self, theta, direction, order: int = 4) -> np.ndarray:
        theta = self._theta(theta)
        direction = np.atleast_1d(np.asarray(direction, dtype=float))
        if self.taylor_fn is not None:
            return np.asarray(self.taylor_fn(theta, direction, order), dtype=float)
        scale = float(np.max(np.abs(direction)))
        if scale == 0.0:
            out = np.zeros(order + 1)
            out[0] = self.log_partition(theta)
            return out
        unit = _numeric_taylor(self.log_partition, theta, direction / scale, order, self.taylor_step)
        return unit * scale ** np.arange(order + 1)

    def T(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.suff_stats(x), dtype=float).reshape(x.shape + (self.dim,))

    def sample(self, theta, rng: np.random.Generator, size=None):
        if self.sampler is None:
            raise NotImplementedError(f"{self.name} has no sampler")
        return self.sampler(self._theta(theta), rng, size)

    def density(self, x, theta) -> np.ndarray:
        """``h(x) exp(theta . T(x) - psi(theta))`` (zero off the support)."""
        if self.log_base is None:
            raise NotImplementedError(f"{self.name} has no base measure")
        theta = self._theta(theta)
        x = np.asarray(x, dtype=float)
        inside = (x >= self.support[0]) & (x <= self.support[1])
        xs = np.where(inside, x, self.support[0] if np.isfinite(self.support[0]) else 0.0)
        logf = self.log_base(xs) + self.T(xs) @ theta - self.log_partition(theta)
        return np.where(inside, np.exp(logf), 0.0)


def _neg_log_taylor(theta, direction, order, coef=1.0):
    # -coef * log(theta + s u) about s = 0
    r = direction[0] / theta[0]
    c = [-coef * math.log(theta[0])]
    for k in range(1, order + 1):
        c.append(coef * (-r) ** k / k)
    return np.array(c)


def _positive(theta):
    return bool(theta[0] > 0)


def _inverse_cdf_exponential(rate, rng, size=None):
    u = rng.random(size)
    return -np.log1p(-u) / rate


def builtin_exponential() -> ExpFamilyModel:
    """Exponential law with rate theta: ``T(x) = -x``, ``psi = -log theta``."""
    return ExpFamilyModel(
        name="exponential", dim=1,
        suff_stats=lambda x: -x[..., None],
        log_partition=lambda th: -math.log(th[0]),
        in_domain=_positive,
        sampler=lambda th, rng, size=None: _inverse_cdf_exponential(th[0], rng, size),
        log_base=lambda x: np.zeros_like(x),
        support=(0.0, np.inf),
        grad=lambda th: np.array([-1.0 / th[0]]),
        hess=lambda th: np.array([[1.0 / th[0] ** 2]]),
        taylor_fn=lambda th, u, order: _neg_log_taylor(th, u, order),
    )


def builtin_gamma_shape3() -> ExpFamilyModel:
    """Gamma law with shape 3 and rate eta: ``T(x) = -x``, ``psi = -3 log eta``."""
    return ExpFamilyModel(
        name="gamma3", dim=1,
        suff_stats=lambda x: -x[..., None],
        log_partition=lambda th: -3.0 * math.log(th[0]),
        in_domain=_positive,
        sampler=lambda th, rng, size=None: rng.gamma(3.0, 1.0 / th[0], size),
        log_base=lambda x: 2.0 * np.log(np.maximum(x, 1e-300)) - math.log(2.0),
        support=(0.0, np.inf),
        grad=lambda th: np.array([-3.0 / th[0]]),
        hess=lambda th: np.array([[3.0 / th[0] ** 2]]),
        taylor_fn=lambda th, u, order: _neg_log_taylor(th, u, order, coef=3.0),
    )


def _normal_psi(th):
    t1, t2 = th
    return -t1 * t1 / (4 * t2) - 0.5 * math.log(-2 * t2)


def _normal_grad(th):
    t1, t2 = th
    return np.array([-t1 / (2 * t2), t1 * t1 / (4 * t2 * t2) - 1 / (2 * t2)])


def _normal_hess(th):
    t1, t2 = th
    h11 = -1 / (2 * t2)
    h12 = t1 / (2 * t2 ** 2)
    h22 = -t1 * t1 / (2 * t2 ** 3) + 1 / (2 * t2 ** 2)
    return np.array([[h11, h12], [h12, h22]])


def _series_mul(a, b, order):
    out = np.zeros(order + 1)
    for i, ai in enumerate(a[:order + 1]):
        out[i:] += ai * b[:order + 1 - i]
    return out


def _normal_taylor(th, u, order):
    t1, t2 = th
    u1, u2 = u
    # -(t1 + s u1)^2 / (4 (t2 + s u2)) - 1/2 log(-2 (t2 + s u2)), expanded in s
    k = np.arange(order + 1)
    inv = (1.0 / t2) * (-u2 / t2) ** k
    num = np.zeros(order + 1)
    num[0] = t1 * t1
    if order >= 1:
        num[1] = 2 * t1 * u1
    if order >= 2:
        num[2] = u1 * u1
    out = -_series_mul(num, inv, order) / 4.0
    r = u2 / t2
    logterm = np.zeros(order + 1)
    logterm[0] = math.log(-2 * t2)
    logterm[1:] = (-1.0) ** (k[1:] + 1) * r ** k[1:] / k[1:]
    return out - 0.5 * logterm


def _normal_sample(th, rng, size=None):
    var = -1.0 / (2 * th[1])
    mean = th[0] * var
    return mean + math.sqrt(var) * rng.standard_normal(size)


def builtin_normal_natural() -> ExpFamilyModel:
    """Normal law in natural coordinates ``(mu/sigma^2, -1/(2 sigma^2))`` with ``T = (x, x^2)``."""
    return ExpFamilyModel(
        name="normal", dim=2,
        suff_stats=lambda x: np.stack([x, x * x], axis=-1),
        log_partition=_normal_psi,
        in_domain=lambda th: bool(th[1] < 0),
        sampler=_normal_sample,
        log_base=lambda x: np.full_like(x, -0.5 * math.log(2 * math.pi)),
        support=(-np.inf, np.inf),
        grad=_normal_grad,
        hess=_normal_hess,
        taylor_fn=_normal_taylor,
    )


def normal_natural_params(mean: float, var: float) -> np.ndarray:
    return np.array([mean / var, -1.0 / (2 * var)])


BUILTIN_FAMILIES = {
    "exponential": builtin_exponential,
    "normal": builtin_normal_natural,
    "gamma3": builtin_gamma_shape3,
}


def get_family(name: str) -> ExpFamilyModel:
    try:
        return BUILTIN_FAMILIES[name]()
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(BUILTIN_FAMILIES)}") from None


# ---------------------------------------------------------------------------
# perturbed parameters


@dataclass(frozen=True)
class PerturbedPair:
    theta1: np.ndarray   # same-label pairs
    theta2: np.ndarray   # different-label pairs


def perturbation(tau, d) -> np.ndarray:
    """Componentwise product ``tau * d``."""
    return np.atleast_1d(np.asarray(tau, dtype=float)) * np.atleast_1d(np.asarray(d, dtype=float))


def make_perturbed_params(tau, d, n: int, fam: ExpFamilyModel | None = None) -> PerturbedPair:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    shift = perturbation(tau, d) / math.sqrt(n)
    pair = PerturbedPair(theta1=tau - shift, theta2=tau + shift)
    if fam is not None:
        for name, th in (("theta1", pair.theta1), ("theta2", pair.theta2)):
            if not fam.in_domain(th):
                raise DomainError(f"{fam.name}: {name}={th.tolist()} leaves the natural domain")
    elif tau.size == 1 and (pair.theta1[0] <= 0 or pair.theta2[0] <= 0):
        # rate-type default (exponential / gamma): parameters must stay positive
        raise DomainError(f"rate parameters must be positive, got {pair.theta1[0]}, {pair.theta2[0]}")
    return pair


# ---------------------------------------------------------------------------
# moment-parameterized families


def moment_to_gamma(mu1: float, mu2: float) -> tuple[float, float]:
    """Shape and scale of the gamma law with mean ``mu1`` and second moment ``mu2``."""
    var = mu2 - mu1 * mu1
    if mu1 <= 0 or var <= 0:
        raise DomainError(f"gamma needs mu1 > 0 and mu2 > mu1^2, got ({mu1}, {mu2})")
    return mu1 * mu1 / var, var / mu1


def moment_to_mixture_exp(mu1: float, mu2: float) -> tuple[float, float]:
    """Rates of the equal-weight two-exponential mixture with moments (mu1, mu2)."""
    disc = 2 * mu2 - 4 * mu1 * mu1
    if disc <= 0:
        raise DomainError(f"mixture needs 2*mu2 - 4*mu1^2 > 0, got ({mu1}, {mu2})")
    s = math.sqrt(disc)
    if 2 * mu1 - s <= 0:
        raise DomainError(f"mixture needs 2*mu1 > sqrt(2*mu2 - 4*mu1^2), got ({mu1}, {mu2})")
    return 2 / (2 * mu1 + s), 2 / (2 * mu1 - s)


class MomentFamily:
    """Sampler indexed by mean ``mu1`` and second raw moment ``mu2``."""

    KINDS = ("normal", "gamma", "mixture")

    def __init__(self, kind: str):
        if kind not in self.KINDS:
            raise ValueError(f"unknown moment family {kind!r}; choose from {self.KINDS}")
        self.kind = kind

    def __repr__(self):
        return f"MomentFamily({self.kind!r})"

    def __eq__(self, other):
        return isinstance(other, MomentFamily) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    def params(self, mu1: float, mu2: float) -> tuple[float, float]:
        """Native parameters: (mean, sd), (shape, scale) or (rate1, rate2)."""
        if self.kind == "normal":
            var = mu2 - mu1 * mu1
            if var <= 0:
                raise DomainError(f"normal needs mu2 > mu1^2, got ({mu1}, {mu2})")
            return mu1, math.sqrt(var)
        if self.kind == "gamma":
            return moment_to_gamma(mu1, mu2)
        return moment_to_mixture_exp(mu1, mu2)

    def is_valid(self, mu1: float, mu2: float) -> bool:
        try:
            self.params(mu1, mu2)
        except DomainError:
            return False
        return True

    def sample(self, mu1: float, mu2: float, rng: np.random.Generator, size=None):
        return sample_weight(self, (mu1, mu2), rng, size)


def sample_weight(fam, params, rng: np.random.Generator, size=None):
    """Draw from a :class:`MomentFamily` (``params = (mu1, mu2)``) or an
    :class:`ExpFamilyModel` (``params = theta``)."""
    if isinstance(fam, ExpFamilyModel):
        return fam.sample(params, rng, size)
    a, b = fam.params(*params)
    if fam.kind == "normal":
        return a + b * rng.standard_normal(size)
    if fam.kind == "gamma":
        return rng.gamma(a, b, size)
    coin = rng.random(size) < 0.5
    rate = np.where(coin, a, b)
    return _inverse_cdf_exponential(rate, rng, size)
