"""Spectral building blocks: Chebyshev collocation on [0, 1], quadrature, cosine grids."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.interpolate import BarycentricInterpolator


@lru_cache(maxsize=32)
def cheb_unit(n_points: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chebyshev-Lobatto nodes on [0, 1] (ascending) with first/second derivative matrices.

    The nodes include both endpoints: s[0] = 0, s[-1] = 1.
    """
    if n_points < 3:
        raise ValueError("need at least 3 collocation points")
    N = n_points - 1
    k = np.arange(N + 1)
    # ascending s = (1 - cos(pi k / N)) / 2, computed via sin^2 for accuracy near 0
    s = np.sin(0.5 * np.pi * k / N) ** 2
    c = np.where((k == 0) | (k == N), 2.0, 1.0) * (-1.0) ** k
    dS = s[:, None] - s[None, :]
    D = np.outer(c, 1.0 / c) / (dS + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    D2 = D @ D
    # negative-sum trick keeps D2 exact on constants
    D2 -= np.diag(D2.sum(axis=1))
    s.setflags(write=False)
    D.setflags(write=False)
    D2.setflags(write=False)
    return s, D, D2


@lru_cache(maxsize=32)
def clenshaw_curtis_unit(n_points: int) -> np.ndarray:
    """Clenshaw-Curtis weights matching the nodes of ``cheb_unit``."""
    N = n_points - 1
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[inner]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
    w[inner] = 2.0 * v / N
    # map [-1, 1] -> [0, 1]
    w = 0.5 * w
    w.setflags(write=False)
    return w


@lru_cache(maxsize=16)
def gauss_legendre_unit(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w


def periodic_grid(kappa: float, n: int) -> tuple[np.ndarray, float]:
    """Uniform trapezoid grid over one period 2*pi/kappa; returns nodes and the weight."""
    period = 2.0 * np.pi / kappa
    x = period * np.arange(n) / n
    return x, period / n


def trapezoid_points(max_harmonic: int) -> int:
    """Points needed for the periodic trapezoid rule to be exact on the integrands at hand."""
    return 4 * max_harmonic + 8


def cheb_interpolant(s_nodes: np.ndarray, values: np.ndarray) -> BarycentricInterpolator:
    return BarycentricInterpolator(s_nodes, values, axis=0)
