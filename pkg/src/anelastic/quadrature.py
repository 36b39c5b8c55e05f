"""Composite Gauss-Legendre rules on [0, 1]."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def gauss_panels(breaks, order=32):
    """Nodes and weights of a composite Gauss-Legendre rule.

    Parameters
    ----------
    breaks : sequence of float
        Increasing panel endpoints.
    order : int
        Nodes per panel.
    """
    breaks = np.asarray(breaks, dtype=float)
    s, w = _legendre(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * s[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def refine(breaks, max_width):
    """Split every panel of ``breaks`` into pieces no wider than ``max_width``."""
    out = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(np.ceil((b - a) / max_width - 1e-12)))
        out.extend(np.linspace(a, b, n + 1)[1:])
    return np.asarray(out)


def dyadic_breaks(levels=60, upper=1.0):
    """Panel endpoints graded geometrically toward zero: 0, 2^-levels, ..., 1/2, 1."""
    inner = upper * 2.0 ** -np.arange(levels, -1, -1, dtype=float)
    return np.concatenate([[0.0], inner])
