#!/usr/bin/env python3
"""Regenerate src/wsbmtest/data/tw1_quantiles.txt.

Quantiles are found by root-finding on the Fredholm-determinant CDF and are
cross-checked against an independent Painleve II (Hastings-McLeod)
integration:

    F1(s) = exp(-1/2 int_s^inf q) * F2(s)^(1/2),
    F2(s) = exp(-int_s^inf (x - s) q(x)^2 dx),   q'' = s q + 2 q^3,  q ~ Ai.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq
from scipy.special import airy

from wsbmtest.tracy_widom import TracyWidomTable, tw1_cdf

S0 = 8.0


def painleve_cdf(points):
    ai, aip, _, _ = airy(S0)
    tail_q = quad(lambda x: airy(x)[0], S0, np.inf, epsabs=1e-16)[0]
    tail_q2 = quad(lambda x: airy(x)[0] ** 2, S0, np.inf, epsabs=1e-18)[0]
    tail_xq2 = quad(lambda x: (x - S0) * airy(x)[0] ** 2, S0, np.inf, epsabs=1e-18)[0]

    def rhs(s, y):
        q, dq, u, v, w = y
        return [dq, s * q + 2 * q ** 3, -q * q, -u, -q]

    pts = np.sort(np.asarray(points))[::-1]
    sol = solve_ivp(rhs, (S0, pts[-1]), [ai, aip, tail_q2, tail_xq2, tail_q],
                    t_eval=pts, rtol=1e-13, atol=1e-16, method="DOP853")
    _, _, _, v, w = sol.y
    f1 = np.exp(-0.5 * w - 0.5 * v)
    return dict(zip(pts, f1))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                           / "src/wsbmtest/data/tw1_quantiles.txt"))
    args = parser.parse_args()

    probs = np.concatenate([[0.001, 0.0025], np.round(np.arange(0.005, 0.9951, 0.005), 4),
                            [0.9975, 0.999]])
    quants = np.array([brentq(lambda s: tw1_cdf(s) - p, -9.0, 8.0, xtol=1e-13) for p in probs])

    check = painleve_cdf(quants)
    worst = max(abs(check[q] - p) for q, p in zip(quants, probs))
    print(f"max |F1_painleve(q_p) - p| = {worst:.2e}", file=sys.stderr)
    if worst > 1e-8:
        sys.exit("Painleve cross-check failed")

    provenance = (
        "Tracy-Widom beta=1 (GOE) quantiles: columns are p and q with F1(q) = p.\n"
        "Computed by scripts/make_tw1_table.py: Fredholm determinant det(I - K),\n"
        "K(x,y) = Ai((x+y)/2)/2 on L^2(s,inf), Gauss-Legendre with 80 nodes, and\n"
        "brentq root finding (xtol 1e-13). Cross-checked against a Painleve II\n"
        f"Hastings-McLeod integration (max CDF discrepancy {worst:.1e}).\n"
        "Agrees with published GOE tables, e.g. q(0.95) = 0.9793, q(0.99) = 2.0234."
    )
    table = TracyWidomTable(probs, quants, provenance)
    Path(args.out).write_text(table.format())
    print(f"wrote {len(probs)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
