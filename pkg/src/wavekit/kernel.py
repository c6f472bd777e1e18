"""Dispersion relation, kernel sets and the local mu-charts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .trivial import SERIES_THRESHOLD, ThetaValue, TrivialParameters, branch_kernels

DEFAULT_MEMBERSHIP_TOL = 1e-9
POLE_TOL = 1e-12
TRANSVERSALITY_TOL = 1e-12
# hard stop for scans whose termination test cannot trigger (tiny kappa)
MAX_SCAN_MODES = 1_000_000


def l_of_theta_sq(theta_sq: float) -> float | None:
    """theta*coth(theta) as a real function of theta^2; None on the poles."""
    if abs(theta_sq) < SERIES_THRESHOLD:
        return 1.0 + theta_sq / 3.0 - theta_sq**2 / 45.0
    if theta_sq > 0:
        t = math.sqrt(theta_sq)
        return t / math.tanh(t)
    t = math.sqrt(-theta_sq)
    sn = math.sin(t)
    if t >= 0.5 * math.pi and abs(sn) < POLE_TOL * (1.0 + t):
        return None
    return t * math.cos(t) / sn


def dispersion_l(n: int, alpha: float, kappa: float) -> float | None:
    """l(n, alpha) = theta_n coth(theta_n) with theta_n^2 = alpha + n^2 kappa^2.

    Returns None where sinh(theta_n) = 0 with theta_n != 0, i.e. where l is undefined.
    """
    if n < 0:
        raise DomainError("mode index must be nonnegative")
    return l_of_theta_sq(alpha + (n * kappa) ** 2)


def rhs_r(params: TrivialParameters) -> float:
    """Right-hand side r of the kernel equation."""
    params.validate()
    a = params.sqrt_abs_alpha
    sl = math.sin(params.lam)
    return 1.0 / (params.mu**2 * a**2 * sl**2) + a / math.tan(params.lam)


@dataclass(frozen=True)
class KernelMode:
    n: int
    theta: ThetaValue
    kappa: float

    def phi_n(self, x, s):
        """cos(n kappa x) * sinh(theta_n s)/theta_n."""
        x = np.asarray(x, dtype=float)
        sinhc, _ = branch_kernels(self.theta.theta_sq, s)
        return np.cos(self.n * self.kappa * x) * sinhc

    @property
    def sinhc1(self) -> float:
        return float(branch_kernels(self.theta.theta_sq, 1.0)[0])

    @property
    def cosh1(self) -> float:
        return float(branch_kernels(self.theta.theta_sq, 1.0)[1])


@dataclass(frozen=True)
class KernelSet:
    modes: tuple[int, ...]
    theta: dict
    contains_zero: bool
    dimension: int
    r: float
    kappa: float
    tol: float
    l_values: dict = field(default_factory=dict)
    undefined_modes: tuple[int, ...] = ()

    def mode(self, n: int) -> KernelMode:
        if n not in self.theta:
            raise DomainError(f"mode {n} is not in the kernel set {list(self.modes)}")
        return KernelMode(n, self.theta[n], self.kappa)

    def __contains__(self, n) -> bool:
        return n in self.modes

    def __iter__(self):
        return iter(self.modes)

    def __len__(self) -> int:
        return self.dimension


def membership_tolerance(r: float, tol: float = DEFAULT_MEMBERSHIP_TOL) -> float:
    return tol * max(1.0, abs(r))


def rounding_floor(theta_sq: float) -> float:
    """Rounding error of l near a root: dl/d(theta^2) is O(1) there, so l inherits eps*|theta^2|."""
    return 16.0 * np.finfo(float).eps * max(1.0, abs(theta_sq))


def kernel_set(params: TrivialParameters, kappa: float | None = None,
               tol: float = DEFAULT_MEMBERSHIP_TOL, *, absolute: bool = False) -> KernelSet:
    """Scan n = 0, 1, ... for solutions of l(n, alpha) = r.

    ``tol`` is relative to max(1, |r|) unless ``absolute`` is set.
    """
    if kappa is not None and kappa != params.kappa:
        params = params.replace(kappa=kappa)
    params.validate()
    if not tol > 0:
        raise DomainError("membership tolerance must be positive")
    kappa = params.kappa
    r = rhs_r(params)
    eff = tol if absolute else membership_tolerance(r, tol)
    a = params.sqrt_abs_alpha
    n_turn = a / kappa

    modes, thetas, lvals, undefined = [], {}, {}, []
    n = 0
    while n <= MAX_SCAN_MODES:
        lv = dispersion_l(n, params.alpha, kappa)
        lvals[n] = lv
        if lv is None:
            undefined.append(n)
        else:
            if abs(lv - r) <= eff + rounding_floor(params.alpha + (n * kappa) ** 2):
                modes.append(n)
                thetas[n] = ThetaValue.for_mode(n, params.alpha, kappa)
            if n >= n_turn and lv > r + eff:
                break
        n += 1
    else:
        raise DomainError("kernel scan did not terminate; kappa too small for the given alpha")
    return KernelSet(tuple(modes), thetas, 0 in modes, len(modes), r, kappa, eff,
                     lvals, tuple(undefined))


def mu_for_mode(n: int, alpha: float, lam: float, kappa: float, sign: int = 1) -> float | None:
    """The mu placing n on the kernel: r(mu, alpha, lam) = l(n, alpha).

    None when l is undefined or the radicand l - |alpha|^(1/2) cot(lam) is not positive.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    lv = dispersion_l(n, alpha, kappa)
    if lv is None:
        return None
    a = math.sqrt(-alpha)
    rad = lv - a / math.tan(lam)
    if not rad > 0:
        return None
    return sign / (a * math.sin(lam) * math.sqrt(rad))


def transversality_value(params: TrivialParameters) -> float:
    """cot(lambda) + mu^2 |alpha|^(3/2) / 2; zero exactly where transversality fails."""
    a = params.sqrt_abs_alpha
    return 1.0 / math.tan(params.lam) + 0.5 * params.mu**2 * a**3


def transversality_ok(params: TrivialParameters) -> bool:
    params.validate()
    return abs(transversality_value(params)) > TRANSVERSALITY_TOL


def _x_cot_x_minus_one(x: float) -> float:
    # x cos x - sin x has the same roots as x cot x - 1 away from sin x = 0, without the poles
    return x * math.cos(x) - math.sin(x)


@lru_cache(maxsize=1)
def sigma_constant() -> float:
    """Smallest positive root of x cot x = 1 (equivalently tan x = x in (pi, 3pi/2))."""
    return brentq(_x_cot_x_minus_one, math.pi, 1.5 * math.pi, xtol=1e-16, rtol=4 * np.finfo(float).eps,
                  maxiter=200)
