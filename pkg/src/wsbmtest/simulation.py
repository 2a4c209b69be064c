"""Monte-Carlo size and power experiments for weighted block models.

Labels are i.i.d. uniform signs. Pair ``(i, j)`` gets a weight with mean
``lam1 + eps1 * s`` and second raw moment ``lam2 + eps2 * s``, where
``s = sigma_i * sigma_j``. Replicate ``r`` always draws from stream
``(seed, r)``, so results are bitwise reproducible for any worker count.
Every grid cell reuses the same streams (common random numbers).
"""

from __future__ import annotations

import csv
import io
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DomainError, WSBMError
from .families import MomentFamily
from .graph import WeightedGraph
from .rng import stream
from .spectral import combined_spectral_statistic, spectral_statistic
from .statistics import (NORMAL, TW1, decide, dichotomized_slc_statistic, slc_statistic,
                         slmc_statistic)

DEFAULT_TESTS = ("slmc", "slc1", "slc2")
_TEST_RE = re.compile(r"^(slmc|slc(\d+)|spectral(\d+)|spectral_combined|dslc)$")


def parse_test_name(name: str) -> str:
    name = name.strip().lower()
    if not _TEST_RE.match(name):
        raise ValueError(f"unknown test {name!r}; expected slmc, slc<l>, spectral<l>, "
                         "spectral_combined or dslc")
    return name


@dataclass(frozen=True)
class SimConfig:
    n: int
    family: str = "normal"
    lam: tuple = (0.0, 1.0)
    eps: tuple = (0.0, 0.0)
    k: int = 3
    m: int = 2
    tests: tuple = DEFAULT_TESTS
    reps: int = 500
    alpha: float = 0.05
    seed: int = 0
    t0: Optional[float] = None   # threshold for the dslc test

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        object.__setattr__(self, "eps", tuple(float(x) for x in self.eps))
        object.__setattr__(self, "tests", tuple(parse_test_name(t) for t in self.tests))
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n < max(self.k, 3):
            raise ValueError(f"n={self.n} is too small for k={self.k}")
        if "dslc" in self.tests and self.t0 is None:
            raise ValueError("the dslc test needs a threshold t0")
        fam = MomentFamily(self.family)
        for s in (1, -1):
            mu = self.moments(s)
            if not fam.is_valid(*mu):
                raise DomainError(f"{self.family}: moments {mu} (label product {s:+d}) are invalid")

    def moments(self, s: int) -> tuple[float, float]:
        return self.lam[0] + self.eps[0] * s, self.lam[1] + self.eps[1] * s


@dataclass
class TestSummary:
    test: str
    rejection_rate: float
    se: float
    stat_mean: float
    stat_var: float
    ok: int
    errors: int

    __test__ = False


@dataclass
class SimResult:
    config: SimConfig
    summaries: list
    elapsed: float = field(default=0.0, compare=False)

    def summary(self, test: str) -> TestSummary:
        for s in self.summaries:
            if s.test == test:
                return s
        raise KeyError(test)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["tests"] = list(cfg["tests"])
        return {"config": cfg, "results": [asdict(s) for s in self.summaries]}


def sample_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.integers(0, 2, size=n).astype(np.int64) * 2 - 1


def generate_wsbm(cfg: SimConfig, sigma: np.ndarray, rng: np.random.Generator) -> WeightedGraph:
    fam = MomentFamily(cfg.family)
    n = len(sigma)
    iu = np.triu_indices(n, k=1)
    s = sigma[iu[0]] * sigma[iu[1]]
    vals = np.empty(s.size)
    for sign in (1, -1):
        mask = s == sign
        vals[mask] = fam.sample(*cfg.moments(sign), rng, size=int(mask.sum()))
    return WeightedGraph.from_upper(n, vals)


def evaluate(cfg: SimConfig, g: WeightedGraph, test: str) -> float:
    if test == "slmc":
        return slmc_statistic(g, cfg.m, cfg.k)
    if test.startswith("slc"):
        return slc_statistic(g, int(test[3:]), cfg.k)
    if test == "dslc":
        return dichotomized_slc_statistic(g, cfg.t0, cfg.k)
    if test == "spectral_combined":
        return combined_spectral_statistic(g, cfg.m)
    return spectral_statistic(g, int(test[8:]))


def null_of(test: str) -> str:
    return TW1 if test.startswith("spectral") else NORMAL


def _replicate(cfg: SimConfig, rep: int) -> list:
    rng = stream(cfg.seed, rep)
    sigma = sample_labels(cfg.n, rng)
    g = generate_wsbm(cfg, sigma, rng)
    out = []
    for test in cfg.tests:
        try:
            out.append(evaluate(cfg, g, test))
        except WSBMError:
            out.append(None)
    return out


def _summarize(cfg: SimConfig, test: str, values: np.ndarray) -> TestSummary:
    ok = [float(v) for v in values if not math.isnan(v)]
    errors = len(values) - len(ok)
    if not ok:
        return TestSummary(test, math.nan, math.nan, math.nan, math.nan, 0, errors)
    null = null_of(test)
    rejects = sum(decide(v, null, cfg.alpha).reject for v in ok)
    p = rejects / len(ok)
    mean = math.fsum(ok) / len(ok)
    var = math.fsum((v - mean) ** 2 for v in ok) / (len(ok) - 1) if len(ok) > 1 else 0.0
    return TestSummary(test, p, math.sqrt(p * (1 - p) / len(ok)), mean, var, len(ok), errors)


def collect_statistics(cfg: SimConfig, workers: int = 1, progress: bool = False) -> dict:
    """Raw per-replicate statistics, ``{test: array}`` with nan where a test failed."""
    # one BLAS thread per replicate keeps floating-point results identical
    # whatever the number of workers
    with threadpool_limits(limits=1, user_api="blas"):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(lambda r: _replicate(cfg, r), range(cfg.reps)))
        else:
            rows = []
            for r in range(cfg.reps):
                rows.append(_replicate(cfg, r))
                if progress and (r + 1) % max(1, cfg.reps // 10) == 0:
                    print(f"  rep {r + 1}/{cfg.reps}", file=sys.stderr)
    return {t: np.array([math.nan if row[i] is None else row[i] for row in rows])
            for i, t in enumerate(cfg.tests)}


def summarize(cfg: SimConfig, values: dict) -> list:
    return [_summarize(cfg, t, values[t]) for t in cfg.tests]


def run_monte_carlo(cfg: SimConfig, workers: int = 1, progress: bool = False) -> SimResult:
    """Run ``cfg.reps`` replicates and aggregate per-test rejection rates.

    A test that fails on a replicate (e.g. zero variance) is counted under
    ``errors`` and excluded from that test's rates; the run continues.
    """
    start = time.perf_counter()
    values = collect_statistics(cfg, workers, progress)
    return SimResult(cfg, summarize(cfg, values), time.perf_counter() - start)


CSV_COLUMNS = ["n", "eps1", "eps2", "family", "test", "k", "rejection_rate", "se",
               "stat_mean", "stat_var", "ok", "errors", "lam1", "lam2", "m", "alpha", "reps", "seed"]


def result_rows(result: SimResult) -> list[dict]:
    cfg = result.config
    rows = []
    for s in result.summaries:
        rows.append({
            "n": cfg.n, "eps1": cfg.eps[0], "eps2": cfg.eps[1], "family": cfg.family,
            "test": s.test, "k": cfg.k, "rejection_rate": s.rejection_rate, "se": s.se,
            "stat_mean": s.stat_mean, "stat_var": s.stat_var, "ok": s.ok, "errors": s.errors,
            "lam1": cfg.lam[0], "lam2": cfg.lam[1], "m": cfg.m, "alpha": cfg.alpha,
            "reps": cfg.reps, "seed": cfg.seed,
        })
    return rows


def power_sweep(base: SimConfig, grid: Sequence[tuple], workers: int = 1,
                progress: bool = False) -> list[dict]:
    """One row per (cell, test) for cells ``(n, (eps1, eps2))``."""
    rows = []
    for n, eps in grid:
        cfg = replace(base, n=int(n), eps=tuple(eps))
        if progress:
            print(f"cell n={cfg.n} eps={cfg.eps}", file=sys.stderr)
        rows.extend(result_rows(run_monte_carlo(cfg, workers, progress)))
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
