"""Finite-difference stencils on arbitrary nodes (Fornberg weights)."""

from __future__ import annotations

import numpy as np


def fd_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Weights of the m-th derivative at x0 from values at nodes xs.

    Fornberg's recursion; exact for polynomials of degree len(xs)-1.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def derivative_on_interval(fun, x0: float, h: float, lo: float, hi: float, m: int = 1, npts: int = 5):
    """m-th derivative of ``fun`` at x0 from an npts-point stencil of spacing h.

    The stencil is centered when possible and shifted to stay inside
    [lo, hi]; ``fun`` must accept an array of nodes.
    """
    half = (npts - 1) // 2
    width = (npts - 1) * h
    if hi - lo < width:
        h = (hi - lo) / (npts - 1)
        width = (npts - 1) * h
    start = x0 - half * h
    start = min(max(start, lo), hi - width)
    xs = start + h * np.arange(npts)
    w = fd_weights(x0, xs, m)
    vals = np.asarray(fun(xs), dtype=float)
    return float(w @ vals)
