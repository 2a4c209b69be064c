"""Addressable random streams.

Every stream is a Philox (counter-based) generator keyed by a user seed and
a tuple of stream ids, so replicate ``r`` of an experiment draws the same
numbers no matter which worker runs it or in what order.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *ids: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))
