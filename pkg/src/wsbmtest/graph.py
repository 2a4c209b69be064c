"""Weighted graph value type, edge-list ingestion and elementwise transforms."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO, Union

import numpy as np

from .errors import EdgeListError

DUPLICATE_POLICIES = ("sum", "max", "last", "error")
_SPLIT = re.compile(r"[\s,]+")


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected weighted graph on nodes ``0..n-1`` stored as a dense matrix.

    The weight matrix is symmetric with a zero diagonal and is made
    read-only on construction, so instances can be shared between workers.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if w.shape[0] < 3:
            raise ValueError("a weighted graph needs at least 3 nodes")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weights must have a zero diagonal")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def upper_values(self) -> np.ndarray:
        """Weights of the C(n,2) unordered pairs, row-major over ``i < j``."""
        iu = np.triu_indices(self.n, k=1)
        return self.weights[iu]

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None

    @classmethod
    def from_upper(cls, n: int, values) -> "WeightedGraph":
        """Build from the row-major upper-triangle values (as ``upper_values``)."""
        w = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        w[iu] = values
        w += w.T
        return cls(w)


@dataclass(frozen=True)
class EdgeListOptions:
    index_base: int = 1
    duplicates: str = "sum"
    missing_weight: float = 0.0
    # tokens are split on any run of whitespace and/or commas
    comment_prefixes: tuple = field(default=("#", "%"))

    def __post_init__(self):
        if self.index_base not in (0, 1):
            raise ValueError("index_base must be 0 or 1")
        if self.duplicates not in DUPLICATE_POLICIES:
            raise ValueError(f"duplicates must be one of {DUPLICATE_POLICIES}")


def _lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_edge_list(source: Union[str, TextIO, Iterable[str]],
                    opts: EdgeListOptions | None = None) -> WeightedGraph:
    """Parse ``<i> <j> <w> [ignored...]`` records into a dense graph.

    Pairs that never appear get ``opts.missing_weight``. Records for the same
    unordered pair are combined according to ``opts.duplicates``.
    """
    opts = opts or EdgeListOptions()
    records: dict[tuple[int, int], float] = {}
    max_index = -1
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(opts.comment_prefixes):
            continue
        tokens = [t for t in _SPLIT.split(line) if t]
        if len(tokens) < 3:
            raise EdgeListError(f"line {lineno}: expected '<i> <j> <w>', got {raw!r}")
        try:
            i = int(tokens[0]) - opts.index_base
            j = int(tokens[1]) - opts.index_base
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer node id in {raw!r}") from None
        try:
            w = float(tokens[2])
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-numeric weight {tokens[2]!r}") from None
        if i < 0 or j < 0:
            raise EdgeListError(f"line {lineno}: node id below index base {opts.index_base}")
        if i == j:
            raise EdgeListError(f"line {lineno}: self-loop on node {tokens[0]}")
        key = (min(i, j), max(i, j))
        if key in records:
            if opts.duplicates == "error":
                raise EdgeListError(f"line {lineno}: duplicate record for pair {tokens[0]}-{tokens[1]}")
            if opts.duplicates == "sum":
                w = records[key] + w
            elif opts.duplicates == "max":
                w = max(records[key], w)
        records[key] = w
        max_index = max(max_index, key[1])

    n = max_index + 1
    if n < 3:
        raise EdgeListError(f"edge list describes {n} nodes; at least 3 are required")
    weights = np.full((n, n), float(opts.missing_weight))
    np.fill_diagonal(weights, 0.0)
    if records:
        idx = np.array(list(records.keys()))
        vals = np.array(list(records.values()))
        weights[idx[:, 0], idx[:, 1]] = vals
        weights[idx[:, 1], idx[:, 0]] = vals
    return WeightedGraph(weights)


def read_edge_list(path: Union[str, Path], opts: EdgeListOptions | None = None) -> WeightedGraph:
    with open(path) as fh:
        return parse_edge_list(fh, opts)


def format_edge_list(g: WeightedGraph) -> str:
    """Serialize as 1-indexed lower-triangle records with 17 significant digits.

    Only nonzero pairs are written, except that the pair ``(n, n-1)`` is
    always emitted so the node count survives a round trip.
    """
    out = []
    w = g.weights
    n = g.n
    for i in range(1, n):
        for j in range(i):
            if w[i, j] != 0 or (i == n - 1 and j == n - 2):
                out.append(f"{i + 1} {j + 1} {w[i, j]:.17g}")
    return "\n".join(out) + "\n"


def dichotomize(g: WeightedGraph, t0: float) -> WeightedGraph:
    """Binary graph with an edge wherever the weight strictly exceeds ``t0``."""
    out = (g.weights > t0).astype(np.float64)
    np.fill_diagonal(out, 0.0)
    return WeightedGraph(out)


def elementwise_power(g: WeightedGraph, l: int) -> np.ndarray:
    if l < 1:
        raise ValueError("power must be >= 1")
    if l == 1:
        return g.weights.copy()
    out = g.weights ** l
    np.fill_diagonal(out, 0.0)
    return out
