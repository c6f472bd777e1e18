"""Kernels of prescribed dimension from representations H = (2n)^2 + (2m-1)^2.

With kappa = pi*r/s (r odd, gcd(r, s) = 1), alpha = -pi^2 r^2 H / 4 and mu chosen so that r(Lambda) = 0,
the kernel modes are n = s*e/2 for every representation H = e^2 + o^2 with e even and o odd.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from sympy import factorint, isprime
from sympy.solvers.diophantine.diophantine import cornacchia

from . import _kernels
from .errors import DomainError, VerificationError
from .kernel import KernelSet, kernel_set, rhs_r
from .trivial import TrivialParameters

DEFAULT_LAMBDA = 0.75 * math.pi
# above this H the brute-force scan (sqrt(H)/2 steps) is replaced by a factorization-based enumeration
BRUTE_FORCE_LIMIT = 10**14


@dataclass(frozen=True)
class TwoSquareRepresentation:
    even_part: int
    odd_part: int
    H: int

    def __post_init__(self):
        if self.even_part % 2 or self.odd_part % 2 == 0 or self.even_part**2 + self.odd_part**2 != self.H:
            raise ValueError(f"invalid representation {self}")

    @property
    def n(self) -> int:
        return self.even_part // 2

    @property
    def m(self) -> int:
        return (self.odd_part + 1) // 2


def _check_odd(H) -> int:
    if isinstance(H, bool) or not isinstance(H, int) and not hasattr(H, "__index__"):
        raise DomainError("H must be an integer")
    H = int(H)
    if H < 1 or H % 2 == 0:
        raise DomainError(f"H must be a positive odd integer, got {H}")
    return H


def _gauss_mul(z, w):
    return (z[0] * w[0] - z[1] * w[1], z[0] * w[1] + z[1] * w[0])


def _gauss_pow(z, k):
    out = (1, 0)
    for _ in range(k):
        out = _gauss_mul(out, z)
    return out


def _pairs_by_factorization(H: int) -> list[tuple[int, int]]:
    """Compose x^2 + y^2 = H from the Gaussian primes over each p = 1 mod 4 (exact integers)."""
    products = [(1, 0)]
    for p, k in factorint(H).items():
        if p % 4 == 3:
            if k % 2:
                return []
            q = p ** (k // 2)
            products = [(q * a, q * b) for a, b in products]
            continue
        (a, b), = cornacchia(1, 1, p)
        z, zbar = (a, b), (a, -b)
        choices = [_gauss_mul(_gauss_pow(z, j), _gauss_pow(zbar, k - j)) for j in range(k + 1)]
        products = [_gauss_mul(u, c) for u in products for c in choices]
    pairs = set()
    for x, y in products:
        x, y = abs(x), abs(y)
        pairs.add((x, y) if x % 2 == 0 else (y, x))
    return sorted(pairs)


def two_square_representations(H: int) -> list[TwoSquareRepresentation]:
    """Every (e, o), e even >= 0, o odd > 0, with e^2 + o^2 = H, sorted by e."""
    H = _check_odd(H)
    if H <= BRUTE_FORCE_LIMIT:
        pairs = _kernels.two_square_pairs(H)
    else:
        pairs = _pairs_by_factorization(H)
    return [TwoSquareRepresentation(int(e), int(o), H) for e, o in pairs]


def representation_count_by_factorization(H: int) -> int:
    """Number of (e, o) representations from the prime factorization of H.

    With D = prod over p = 1 mod 4 of (exponent + 1) when every p = 3 mod 4 has even exponent
    (D = 0 otherwise), the count is (D + [H is a square]) / 2.
    """
    H = _check_odd(H)
    D = 1
    for p, k in factorint(H).items():
        if p % 4 == 3:
            if k % 2:
                return 0
        else:
            D *= k + 1
    square = math.isqrt(H) ** 2 == H
    return (D + int(square)) // 2


def representation_counts_table(h_max: int):
    """Brute-force counts for all H <= h_max, indexed by H."""
    return _kernels.two_square_count_table(int(h_max))


def divisor_free(modes) -> bool:
    """True when no mode divides another (each mode then gives its own solution curve)."""
    ms = sorted(modes)
    return all(b % a for i, a in enumerate(ms) for b in ms[i + 1:] if a)


@dataclass(frozen=True)
class ConstructedKernel:
    params: TrivialParameters
    kappa: float
    target_modes: tuple[int, ...]
    H: int
    rational_kappa: tuple[int, int]
    representations: tuple[TwoSquareRepresentation, ...]
    verified: KernelSet

    @property
    def divisor_free(self) -> bool:
        return divisor_free(self.target_modes)

    def report(self) -> dict:
        return {
            "H": self.H,
            "M": list(self.target_modes),
            "dimension": len(self.target_modes),
            "kappa": self.kappa,
            "rational_kappa": list(self.rational_kappa),
            "params": self.params.as_dict(),
            "r": rhs_r(self.params),
            "representations": [[rep.even_part, rep.odd_part] for rep in self.representations],
            "divisor_free": self.divisor_free,
            "verification": {
                "kernel_set": list(self.verified.modes),
                "contains_zero": self.verified.contains_zero,
                "matches": list(self.verified.modes) == list(self.target_modes),
            },
        }


def _mu_for_zero_r(alpha: float, lam: float) -> float:
    a = math.sqrt(-alpha)
    return math.sqrt(-2.0 / (a**3 * math.sin(2.0 * lam)))


def construct_kernel_from_H(H: int, r: int = 1, s: int = 1, lam: float = DEFAULT_LAMBDA,
                            tol: float = 1e-9) -> ConstructedKernel:
    """Build Lambda for an explicit odd H; the dimension equals the number of representations."""
    H = _check_odd(H)
    if r < 1 or s < 1 or r % 2 == 0:
        raise DomainError("need positive integers r, s with r odd")
    if math.gcd(r, s) != 1:
        raise DomainError(f"r={r} and s={s} are not coprime")
    if not (0.5 * math.pi < lam < math.pi):
        raise DomainError("lambda must lie in (pi/2, pi) so that sin(2 lambda) < 0")
    reps = two_square_representations(H)
    kappa = math.pi * r / s
    alpha = -(math.pi**2) * r * r * H / 4.0
    params = TrivialParameters(_mu_for_zero_r(alpha, lam), alpha, lam, kappa).validate()
    target = tuple(sorted(s * rep.n for rep in reps))
    found = kernel_set(params, kappa, tol)
    if tuple(found.modes) != target:
        raise VerificationError(
            f"kernel scan gives {list(found.modes)} but the representations of H={H} predict {list(target)}")
    return ConstructedKernel(params, kappa, target, H, (r, s), tuple(reps), found)


def construct_kernel(N: int, p: int, r: int = 1, s: int = 1, lam: float = DEFAULT_LAMBDA,
                     tol: float = 1e-9) -> ConstructedKernel:
    """Kernel of dimension N from H = p^(2N-1) with p prime, p = 1 mod 4."""
    if N < 1:
        raise DomainError("N must be a positive integer")
    if not isprime(p) or p % 4 != 1:
        raise DomainError(f"p={p} must be a prime congruent to 1 mod 4")
    built = construct_kernel_from_H(p ** (2 * N - 1), r, s, lam, tol)
    if len(built.target_modes) != N:
        raise VerificationError(f"H={built.H} has {len(built.target_modes)} representations, expected {N}")
    if 0 in built.target_modes:
        raise VerificationError("mode 0 entered the constructed kernel")
    return built
