"""Harmonic representations of functions on the flattened strip and the Y inner product.

A ``HarmonicField`` is a finite cosine sum  sum_k P_k(s) cos(k kappa x)  whose profiles P_k carry
their first two s-derivatives, so every jet the derivative formulas need is available pointwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .spectral import cheb_unit, gauss_legendre_unit, periodic_grid, trapezoid_points


class Profile:
    """A function of s with first and second derivatives."""

    __slots__ = ("f", "fs", "fss")

    def __init__(self, f: Callable, fs: Callable, fss: Callable):
        self.f, self.fs, self.fss = f, fs, fss

    @classmethod
    def from_cheb(cls, values) -> "Profile":
        """Spectral profile from values on the ``cheb_unit`` nodes."""
        values = np.asarray(values, dtype=float)
        s, D, D2 = cheb_unit(values.size)
        return cls(BarycentricInterpolator(s, values),
                   BarycentricInterpolator(s, D @ values),
                   BarycentricInterpolator(s, D2 @ values))

    @classmethod
    def zero(cls) -> "Profile":
        z = lambda s: np.zeros_like(np.asarray(s, dtype=float))  # noqa: E731
        return cls(z, z, z)

    def __call__(self, s):
        return np.asarray(self.f(np.asarray(s, dtype=float)), dtype=float)

    def d1(self, s):
        return np.asarray(self.fs(np.asarray(s, dtype=float)), dtype=float)

    def d2(self, s):
        return np.asarray(self.fss(np.asarray(s, dtype=float)), dtype=float)

    def lincomb(self, a: float, other: "Profile", b: float) -> "Profile":
        p, q = self, other
        return Profile(lambda s: a * p(s) + b * q(s),
                       lambda s: a * p.d1(s) + b * q.d1(s),
                       lambda s: a * p.d2(s) + b * q.d2(s))

    def scaled(self, c: float) -> "Profile":
        p = self
        return Profile(lambda s: c * p(s), lambda s: c * p.d1(s), lambda s: c * p.d2(s))


def _merge(a: dict, b: dict, ca: float, cb: float, combine) -> dict:
    out = {}
    for k in set(a) | set(b):
        if k in a and k in b:
            out[k] = combine(a[k], ca, b[k], cb)
        elif k in a:
            out[k] = combine(a[k], ca, None, 0.0)
        else:
            out[k] = combine(None, 0.0, b[k], cb)
    return out


def _combine_profiles(p, ca, q, cb):
    if p is None:
        return q.scaled(cb)
    if q is None:
        return p.scaled(ca)
    return p.lincomb(ca, q, cb)


def _combine_scalars(p, ca, q, cb):
    return (0.0 if p is None else ca * p) + (0.0 if q is None else cb * q)


@dataclass(frozen=True)
class HarmonicField:
    """sum_k P_k(s) cos(k kappa x)."""

    profiles: dict
    kappa: float

    @property
    def max_harmonic(self) -> int:
        return max(self.profiles, default=0)

    def __call__(self, x, s):
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        out = np.zeros(x.shape)
        for k, P in self.profiles.items():
            out = out + P(s) * np.cos(k * self.kappa * x)
        return out

    def at_surface(self) -> dict:
        """Cosine coefficients of the trace at s = 1."""
        return {k: float(P(1.0)) for k, P in self.profiles.items()}

    def jets(self, x, s) -> dict:
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        out = {key: np.zeros(x.shape) for key in ("f", "f_s", "f_ss", "f_x", "f_xs", "f_xx")}
        for k, P in self.profiles.items():
            w = k * self.kappa
            c, sn = np.cos(w * x), np.sin(w * x)
            p, ps, pss = P(s), P.d1(s), P.d2(s)
            out["f"] += p * c
            out["f_s"] += ps * c
            out["f_ss"] += pss * c
            out["f_x"] += -w * p * sn
            out["f_xs"] += -w * ps * sn
            out["f_xx"] += -w * w * p * c
        return out

    def lincomb(self, a: float, other: "HarmonicField", b: float) -> "HarmonicField":
        return HarmonicField(_merge(self.profiles, other.profiles, a, b, _combine_profiles), self.kappa)


@dataclass(frozen=True)
class WavePair:
    """(eta, f) with eta(x) = sum_k E_k cos(k kappa x) and f a HarmonicField.

    Used both for w = (eta, phi_hat) in X and for the Z basis vectors (eta_phi, phi).
    """

    eta_coeffs: dict
    field: HarmonicField
    source_mode: object = None

    @property
    def kappa(self) -> float:
        return self.field.kappa

    @property
    def max_harmonic(self) -> int:
        return max(max(self.eta_coeffs, default=0), self.field.max_harmonic)

    def eta(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, E in self.eta_coeffs.items():
            out = out + E * np.cos(k * self.kappa * x)
        return out

    # aliases matching the names used for transformed kernel functions
    def eta_phi(self, x):
        return self.eta(x)

    def phi_hat(self, x, s):
        return self.field(x, s)

    def jets(self, x, s) -> dict:
        """eta-jets and field jets broadcast over (x, s)."""
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        out = self.field.jets(x, s)
        eta = np.zeros(x.shape)
        eta_x = np.zeros(x.shape)
        eta_xx = np.zeros(x.shape)
        for k, E in self.eta_coeffs.items():
            w = k * self.kappa
            eta = eta + E * np.cos(w * x)
            eta_x = eta_x - E * w * np.sin(w * x)
            eta_xx = eta_xx - E * w * w * np.cos(w * x)
        out.update(eta=eta, eta_x=eta_x, eta_xx=eta_xx)
        return out

    def lincomb(self, a: float, other: "WavePair", b: float) -> "WavePair":
        return WavePair(_merge(self.eta_coeffs, other.eta_coeffs, a, b, _combine_scalars),
                        self.field.lincomb(a, other.field, b))

    def __add__(self, other):
        return self.lincomb(1.0, other, 1.0)

    def __sub__(self, other):
        return self.lincomb(1.0, other, -1.0)

    def __rmul__(self, c: float):
        return self.lincomb(float(c), self, 0.0)

    def __neg__(self):
        return self.lincomb(-1.0, self, 0.0)


# Kernel basis elements w_n* = T phi_n are WavePairs tagged with their source mode.
KernelPair = WavePair


def _as_callables(w):
    if isinstance(w, WavePair):
        return w.eta, w.phi_hat, w.max_harmonic
    eta, interior = w
    return eta, interior, None


def ip_Y(w1, w2, kappa: float, n_x: int | None = None, n_s: int = 64) -> float:
    """Y inner product: int eta1 eta2 dx + int int f1 f2 dx ds over one period times [0, 1].

    Trapezoid in x (exact for trigonometric polynomials of the degrees involved) and
    Gauss-Legendre in s. Arguments are WavePairs or (eta(x), f(x, s)) callable pairs.
    """
    e1, f1, m1 = _as_callables(w1)
    e2, f2, m2 = _as_callables(w2)
    if n_x is None:
        n_x = trapezoid_points((m1 or 16) + (m2 or 16))
    x, wx = periodic_grid(kappa, n_x)
    s, ws = gauss_legendre_unit(n_s)
    surface = wx * float(np.sum(np.asarray(e1(x)) * np.asarray(e2(x))))
    X, S = np.meshgrid(x, s, indexing="ij")
    interior = wx * float(np.sum((np.asarray(f1(X, S)) * np.asarray(f2(X, S))) @ ws))
    return surface + interior


def cosine_coefficient(values_x: np.ndarray, x: np.ndarray, k: int, kappa: float) -> np.ndarray:
    """Coefficient of cos(k kappa x) of a periodic sample (trapezoid rule, axis 0)."""
    n = x.size
    c = np.cos(k * kappa * x)
    factor = 1.0 if k == 0 else 2.0
    return factor * np.tensordot(c, values_x, axes=(0, 0)) / n
