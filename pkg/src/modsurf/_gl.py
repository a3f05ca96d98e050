"""Cached Gauss-Legendre nodes and simple panel quadrature helpers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gl_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], cached by order."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gl_rule(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to [a, b]."""
    x, w = gl_nodes(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gl_panels(a: float, b: float, n_panels: int, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule: `n_panels` equal panels on [a, b]."""
    edges = np.linspace(a, b, n_panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gl_rule(lo, hi, n_nodes)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)
