"""Parallel (trivial) flows psi0(s) = mu*cos(|alpha|^(1/2)*(s - 1) + lambda) and their constants.

Everything here works on the unit-depth strip s in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# below this value of |theta^2| s^2 the series branch is used
SERIES_THRESHOLD = 1e-8


def branch_kernels(theta_sq, s):
    """Real evaluation of (sinh(theta*s)/theta, cosh(theta*s)) for theta^2 of either sign.

    For theta^2 < 0 this is (sin(|theta| s)/|theta|, cos(|theta| s)); at theta^2 = 0 it is (s, 1).
    Accepts scalars or broadcastable arrays.
    """
    theta_sq = np.asarray(theta_sq, dtype=float)
    s = np.asarray(s, dtype=float)
    theta_sq, s = np.broadcast_arrays(theta_sq, s)
    z = theta_sq * s * s
    sinhc = np.empty(z.shape)
    cosh = np.empty(z.shape)

    small = np.abs(z) < SERIES_THRESHOLD
    pos = (theta_sq > 0) & ~small
    neg = (theta_sq < 0) & ~small

    zs = z[small]
    sinhc[small] = s[small] * (1.0 + zs / 6.0 * (1.0 + zs / 20.0))
    cosh[small] = 1.0 + zs / 2.0 * (1.0 + zs / 12.0)

    t = np.sqrt(theta_sq[pos])
    sinhc[pos] = np.sinh(t * s[pos]) / t
    cosh[pos] = np.cosh(t * s[pos])

    t = np.sqrt(-theta_sq[neg])
    sinhc[neg] = np.sin(t * s[neg]) / t
    cosh[neg] = np.cos(t * s[neg])

    if sinhc.ndim == 0:
        return float(sinhc), float(cosh)
    return sinhc, cosh


@dataclass(frozen=True)
class ThetaValue:
    """theta_n^2 = alpha + n^2 kappa^2 with branch-safe hyperbolic evaluation."""

    theta_sq: float
    mode_n: int

    @classmethod
    def for_mode(cls, n: int, alpha: float, kappa: float) -> "ThetaValue":
        return cls(alpha + (n * kappa) ** 2, n)

    @property
    def is_oscillatory(self) -> bool:
        return self.theta_sq < 0

    @property
    def abs_theta(self) -> float:
        return math.sqrt(abs(self.theta_sq))

    def sinhc_at(self, s):
        return branch_kernels(self.theta_sq, s)[0]

    def cosh_at(self, s):
        return branch_kernels(self.theta_sq, s)[1]


@dataclass(frozen=True)
class TrivialParameters:
    """Lambda = (mu, alpha, lambda) together with the wavenumber kappa.

    ``lam`` is the phase lambda (``lambda`` is reserved in Python).
    """

    mu: float
    alpha: float
    lam: float
    kappa: float = 1.0

    def validate(self) -> "TrivialParameters":
        problems = []
        if not math.isfinite(self.mu) or self.mu == 0:
            problems.append("mu must be nonzero")
        if not (math.isfinite(self.alpha) and self.alpha < 0):
            problems.append("alpha must be strictly negative")
        if not (0 < self.lam < math.pi):
            problems.append("lambda must lie in (0, pi)")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            problems.append("kappa must be strictly positive")
        if problems:
            raise DomainError("parameters outside U: " + "; ".join(problems))
        return self

    @property
    def sqrt_abs_alpha(self) -> float:
        return math.sqrt(-self.alpha)

    def replace(self, **changes) -> "TrivialParameters":
        data = {"mu": self.mu, "alpha": self.alpha, "lam": self.lam, "kappa": self.kappa}
        data.update(changes)
        return TrivialParameters(**data)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "alpha": self.alpha, "lambda": self.lam, "kappa": self.kappa}


@dataclass(frozen=True)
class TrivialFlow:
    """psi0 and its derivatives for fixed parameters.

    Derivatives with respect to s, and with respect to lambda, alpha and mu, are closed forms.
    """

    params: TrivialParameters
    Q: float
    m0: float
    m1: float

    @property
    def a(self) -> float:
        return self.params.sqrt_abs_alpha

    def _phase(self, s):
        return self.a * (np.asarray(s, dtype=float) - 1.0) + self.params.lam

    def psi0(self, s):
        return self.params.mu * np.cos(self._phase(s))

    def psi0_s(self, s):
        return -self.params.mu * self.a * np.sin(self._phase(s))

    def psi0_ss(self, s):
        return self.params.alpha * self.psi0(s)

    def psi0_sss(self, s):
        return self.params.alpha * self.psi0_s(s)

    # lambda-derivatives
    def psi0_lambda(self, s):
        return -self.params.mu * np.sin(self._phase(s))

    def psi0_s_lambda(self, s):
        return -self.params.mu * self.a * np.cos(self._phase(s))

    def psi0_ss_lambda(self, s):
        return self.params.mu * self.a**2 * np.sin(self._phase(s))

    # alpha-derivatives; d|alpha|^(1/2)/d alpha = -1/(2 |alpha|^(1/2))
    def psi0_alpha(self, s):
        s = np.asarray(s, dtype=float)
        return self.params.mu * np.sin(self._phase(s)) * (s - 1.0) / (2.0 * self.a)

    def psi0_s_alpha(self, s):
        s = np.asarray(s, dtype=float)
        ph = self._phase(s)
        return self.params.mu * (np.sin(ph) / (2.0 * self.a) + 0.5 * (s - 1.0) * np.cos(ph))

    def psi0_ss_alpha(self, s):
        return self.psi0(s) + self.params.alpha * self.psi0_alpha(s)

    # mu-derivatives (psi0 is linear in mu)
    def psi0_s_mu(self, s):
        return self.psi0_s(s) / self.params.mu

    def psi0_ss_mu(self, s):
        return self.psi0_ss(s) / self.params.mu

    def param_derivative(self, name: str):
        """Return (d psi0_s, d psi0_ss) callables for parameter ``name`` in {lambda, alpha, mu}."""
        table = {
            "lambda": (self.psi0_s_lambda, self.psi0_ss_lambda),
            "alpha": (self.psi0_s_alpha, self.psi0_ss_alpha),
            "mu": (self.psi0_s_mu, self.psi0_ss_mu),
        }
        try:
            return table[name]
        except KeyError:
            raise ValueError(f"unknown parameter {name!r}") from None

    @property
    def psi0_s1(self) -> float:
        """psi0_s(1) = -mu |alpha|^(1/2) sin(lambda); nonzero on U."""
        return float(self.psi0_s(1.0))

    @property
    def psi0_ss1(self) -> float:
        return float(self.psi0_ss(1.0))

    @property
    def robin_coefficient(self) -> float:
        """psi0_ss(1) + 1/psi0_s(1), the zeroth-order coefficient of the surface operator."""
        return self.psi0_ss1 + 1.0 / self.psi0_s1


def make_trivial_flow(params: TrivialParameters) -> TrivialFlow:
    params.validate()
    mu, lam, a = params.mu, params.lam, params.sqrt_abs_alpha
    Q = 0.5 * mu**2 * a**2 * math.sin(lam) ** 2
    m0 = mu * math.cos(lam - a)
    m1 = mu * math.cos(lam)
    return TrivialFlow(params=params, Q=Q, m0=m0, m1=m1)
