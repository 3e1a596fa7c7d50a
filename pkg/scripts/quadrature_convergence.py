#!/usr/bin/env python3
"""Convergence table for the product-trapezoidal fractional integral.

Measures sup-norm errors and per-doubling orders on three data classes:
exact-on-grid (constant), smooth, and the singular-rate case t^(1/2).
The t^(1/2) orders approach 3/2 strictly from below; run with more
levels to watch the approach.

    python scripts/quadrature_convergence.py [--levels 6] [--alpha 1.5]
"""

import argparse
import math

import numpy as np

from resbvp import GridFn, frac_integral, gamma


def error_table(name, sample, exact, alpha, levels):
    print(f"\n{name} (order {alpha}):")
    print(f"  {'N':>6}  {'sup error':>12}  {'order':>7}")
    prev = None
    n = 128
    for _ in range(levels):
        t = np.linspace(0.0, 1.0, n + 1)
        out = frac_integral(GridFn(sample(t)), alpha)
        err = float(np.abs(out.values.ravel() - exact(t)).max())
        order = f"{math.log2(prev / err):7.4f}" if prev and err > 0 else "      -"
        print(f"  {n:>6}  {err:12.4e}  {order}")
        prev = err
        n *= 2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--alpha", type=float, default=1.5)
    args = ap.parse_args()
    a = args.alpha

    error_table(
        "constant data (rule is exact)",
        lambda t: np.ones_like(t),
        lambda t: t**a / gamma(a + 1.0),
        a,
        args.levels,
    )
    error_table(
        "smooth data sin(2t)",
        lambda t: np.sin(2.0 * t),
        # reference at one finer level stands in for the closed form
        lambda t: frac_integral(
            GridFn(np.sin(2.0 * np.linspace(0, 1, 8 * (len(t) - 1) + 1))), a
        ).values.ravel()[:: 8],
        a,
        args.levels,
    )
    error_table(
        "singular-rate data t^(1/2)",
        np.sqrt,
        lambda t: gamma(1.5) / gamma(1.5 + a) * t ** (0.5 + a),
        a,
        args.levels,
    )


if __name__ == "__main__":
    main()
