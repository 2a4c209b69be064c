"""Tracy-Widom (beta = 1) distribution.

The CDF is evaluated as the Fredholm determinant ``det(I - K)`` of the kernel
``K(x, y) = Ai((x + y) / 2) / 2`` on ``L^2(s, inf)``, discretized with
Gauss-Legendre quadrature (Bornemann's method; exponentially convergent).
Quantiles used for critical values come from a static table generated by
``scripts/make_tw1_table.py`` and are interpolated with a monotone cubic.
"""

from __future__ import annotations

import math
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import airy

# Ai(x) < 1e-19 beyond this point, so the kernel is negligible there.
_AIRY_CUTOFF = 17.0


@lru_cache(maxsize=8)
def _legendre(m: int):
    return np.polynomial.legendre.leggauss(m)


def _log_cdf(s: float, m: int) -> float:
    length = max(_AIRY_CUTOFF - s, 4.0)
    xg, wg = _legendre(m)
    x = s + 0.5 * length * (xg + 1.0)
    w = 0.5 * length * wg
    ai = airy(0.5 * (x[:, None] + x[None, :]))[0]
    sw = np.sqrt(w)
    k = 0.5 * sw[:, None] * ai * sw[None, :]
    lam = np.linalg.eigvalsh(k)
    return float(np.sum(np.log1p(-lam)))


def tw1_logcdf(s: float, m: int = 80) -> float:
    if s >= _AIRY_CUTOFF:
        return 0.0
    if s < -12.0:
        return -math.inf if s < -40 else _log_cdf(s, max(m, 160))
    return _log_cdf(s, m)


def tw1_cdf(s: float, m: int = 80) -> float:
    return math.exp(tw1_logcdf(s, m))


def tw1_sf(s: float, m: int = 80) -> float:
    """Upper tail ``1 - F1(s)``, accurate also when it is tiny."""
    return -math.expm1(tw1_logcdf(s, m))


# ---------------------------------------------------------------------------
# quantile table


def _logit(p):
    return np.log(p) - np.log1p(-p)


class TracyWidomTable:
    """``(probability, quantile)`` pairs with monotone cubic interpolation.

    Interpolation runs on the logit scale, where the tails are nearly linear.
    """

    def __init__(self, probs, quantiles, provenance: str = ""):
        probs = np.asarray(probs, dtype=float)
        quantiles = np.asarray(quantiles, dtype=float)
        if probs.ndim != 1 or probs.shape != quantiles.shape or probs.size < 2:
            raise ValueError("table needs matching 1-d probability and quantile columns")
        if np.any(np.diff(probs) <= 0) or np.any(np.diff(quantiles) <= 0):
            raise ValueError("probabilities and quantiles must be strictly increasing")
        if probs[0] <= 0 or probs[-1] >= 1:
            raise ValueError("probabilities must lie in (0, 1)")
        self.probs = probs
        self.quantiles = quantiles
        self.provenance = provenance
        self._interp = PchipInterpolator(_logit(probs), quantiles)

    def quantile(self, p: float) -> float:
        if not (self.probs[0] <= p <= self.probs[-1]):
            raise ValueError(f"probability {p} outside tabulated range "
                             f"[{self.probs[0]}, {self.probs[-1]}]")
        return float(self._interp(_logit(p)))

    @classmethod
    def parse(cls, text: str) -> "TracyWidomTable":
        header, rows = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header.append(line[1:].strip())
                continue
            p, q = line.split()[:2]
            rows.append((float(p), float(q)))
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1], "\n".join(header))

    def format(self) -> str:
        lines = [f"# {h}" if h else "#" for h in self.provenance.splitlines()]
        lines += [f"{p:.4f} {q:.10f}" for p, q in zip(self.probs, self.quantiles)]
        return "\n".join(lines) + "\n"


@lru_cache(maxsize=1)
def default_table() -> TracyWidomTable:
    text = resources.files("wsbmtest").joinpath("data/tw1_quantiles.txt").read_text()
    return TracyWidomTable.parse(text)


def tw1_critical(gamma: float, table: TracyWidomTable | None = None) -> float:
    """Upper-``gamma`` quantile of TW1 (the value exceeded with probability gamma)."""
    table = table or default_table()
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    return table.quantile(1.0 - gamma)
