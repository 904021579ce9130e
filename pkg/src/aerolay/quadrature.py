"""Vectorized adaptive Gauss-Legendre quadrature over fixed panel edges.

The integrands in this package are smooth inside each LoS step cell and
jump only at the cell edges, so panels start at the breakpoints and are
bisected until the two-half estimate agrees with the whole-panel estimate.
Every integrand returns many columns at once (one per Laplace argument or
SINR threshold); a panel is accepted only once all of its columns agree.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=8)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_sums(f, a, b, order):
    x, w = _legendre(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = np.asarray(f(nodes), dtype=float)
    vals = vals.reshape(len(a), order, *vals.shape[1:])
    wq = (half[:, None] * w[None, :]).reshape(len(a), order, *([1] * (vals.ndim - 2)))
    return np.sum(vals * wq, axis=1)


def adaptive_quad(f, edges, rtol=1e-6, atol=1e-10, order=10, max_depth=48, label="integral", panel_totals=False):
    """Integrate ``f`` over ``[edges[0], edges[-1]]``.

    ``f`` maps a 1-D node array of length n to an array of shape ``(n, ...)``.
    Returns the integral with the trailing shape of ``f``'s output, or one
    such integral per input panel when ``panel_totals`` is set.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    origin = np.arange(len(a))
    keep = b > a
    a, b, origin = a[keep], b[keep], origin[keep]
    coarse = _panel_sums(f, a, b, order)
    total = np.zeros((len(edges) - 1,) + coarse.shape[1:])
    for _ in range(max_depth):
        mid = 0.5 * (a + b)
        left = _panel_sums(f, a, mid, order)
        right = _panel_sums(f, mid, b, order)
        fine = left + right
        err = np.abs(fine - coarse)
        ok = err <= atol + rtol * np.abs(fine)
        ok = ok.reshape(len(a), -1).all(axis=1)
        np.add.at(total, origin[ok], fine[ok])
        if ok.all():
            return total if panel_totals else total.sum(axis=0)
        bad = ~ok
        a = np.concatenate([a[bad], mid[bad]])
        b = np.concatenate([mid[bad], b[bad]])
        origin = np.concatenate([origin[bad], origin[bad]])
        coarse = np.concatenate([left[bad], right[bad]])
    raise QuadratureError(f"{label}: no convergence after {max_depth} bisections on {len(a)} panels")


def fixed_rule(edges, order=12):
    """Composite Gauss-Legendre nodes and weights on the given panels."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    x, w = _legendre(order)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def geometric_edges(start, stop, ratio=1.25):
    """Edges from ``start`` to ``stop`` growing by ``ratio`` per panel."""
    if stop <= start:
        return np.array([start])
    n = max(1, int(np.ceil(np.log(stop / start) / np.log(ratio))))
    return np.geomspace(start, stop, n + 1)


class LogTable:
    """Lazily tabulated positive function on a log-spaced grid.

    Values are computed one decade block at a time (so a table entry never
    depends on which other entries were requested) and read back with local
    four-point Lagrange interpolation in log-log coordinates.
    """

    def __init__(self, fn, per_decade=20):
        self.fn = fn
        self.per_decade = per_decade
        self._blocks: dict[int, np.ndarray] = {}

    def _block(self, k):
        if k not in self._blocks:
            idx = k * self.per_decade + np.arange(self.per_decade)
            x = 10.0 ** (idx / self.per_decade)
            vals = np.asarray(self.fn(x), dtype=float)
            self._blocks[k] = np.log(np.maximum(vals, 1e-300))
        return self._blocks[k]

    def _logvals(self, idx):
        blocks = np.floor_divide(idx, self.per_decade)
        out = np.empty(idx.shape)
        for k in np.unique(blocks):
            sel = blocks == k
            out[sel] = self._block(int(k))[idx[sel] - k * self.per_decade]
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        pos = x > 0
        if not pos.any():
            return out
        u = np.log10(x[pos]) * self.per_decade
        i0 = np.floor(u).astype(np.int64) - 1
        t = u - i0 - 1.0  # position relative to node i0+1, in [0, 1)
        y = [self._logvals(i0 + j) for j in range(4)]
        # Lagrange basis on nodes -1, 0, 1, 2
        l0 = -t * (t - 1) * (t - 2) / 6.0
        l1 = (t + 1) * (t - 1) * (t - 2) / 2.0
        l2 = -(t + 1) * t * (t - 2) / 2.0
        l3 = (t + 1) * t * (t - 1) / 6.0
        out[pos] = np.exp(l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3])
        return out
