"""Linear operators T and L, the Y projection, transversality pairings, the 2x2 determinant,
closed-form derivatives of F at the trivial point, and second-order data of bifurcation curves.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, SolvabilityError, TransversalityError, VerificationError
from .fields import HarmonicField, Profile, WavePair, cosine_coefficient, ip_Y
from .kernel import KernelSet, kernel_set, l_of_theta_sq, transversality_ok, transversality_value
from .spectral import cheb_unit, periodic_grid, trapezoid_points
from .trivial import TrivialFlow, branch_kernels


# ---------------------------------------------------------------------------------------------
# kernel functions and the T isomorphism


def kernel_profile(theta_sq: float) -> Profile:
    """s -> sinh(theta s)/theta with exact derivatives cosh(theta s) and theta^2 sinhc."""
    return Profile(lambda s: branch_kernels(theta_sq, s)[0],
                   lambda s: branch_kernels(theta_sq, s)[1],
                   lambda s: theta_sq * branch_kernels(theta_sq, s)[0])


def kernel_field(flow: TrivialFlow, n: int) -> HarmonicField:
    """phi_n(x, s) = cos(n kappa x) sinh(theta_n s)/theta_n."""
    p = flow.params
    return HarmonicField({n: kernel_profile(p.alpha + (n * p.kappa) ** 2)}, p.kappa)


def _s_psi0s_profile(flow: TrivialFlow) -> Profile:
    # s psi0_s(s) and its derivatives
    return Profile(lambda s: s * flow.psi0_s(s),
                   lambda s: flow.psi0_s(s) + s * flow.psi0_ss(s),
                   lambda s: 2.0 * flow.psi0_ss(s) + s * flow.psi0_sss(s))


@dataclass(frozen=True)
class CallablePair:
    """A transformed pair for arbitrary callables phi(x, s) (no derivative information)."""

    eta_phi: Callable
    phi_hat: Callable

    def eta(self, x):
        return self.eta_phi(x)


def t_isomorphism(flow: TrivialFlow, phi, source_mode=None):
    """T phi = (-phi(., 1)/psi0_s(1), phi - s psi0_s(s)/psi0_s(1) * phi(., 1)).

    A HarmonicField input gives a WavePair (with exact jets); any other callable phi(x, s)
    gives a CallablePair evaluated pointwise.
    """
    p1 = flow.psi0_s1
    if isinstance(phi, HarmonicField):
        trace = phi.at_surface()
        sp = _s_psi0s_profile(flow)
        profiles = {k: P.lincomb(1.0, sp, -trace[k] / p1) for k, P in phi.profiles.items()}
        return WavePair({k: -v / p1 for k, v in trace.items()}, HarmonicField(profiles, phi.kappa),
                        source_mode)

    def eta_phi(x):
        x = np.asarray(x, dtype=float)
        return -np.asarray(phi(x, np.ones_like(x)), dtype=float) / p1

    def phi_hat(x, s):
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        return np.asarray(phi(x, s), dtype=float) - s * flow.psi0_s(s) / p1 * np.asarray(phi(x, np.ones_like(x)))

    return CallablePair(eta_phi, phi_hat)


def w_star(flow: TrivialFlow, n: int) -> WavePair:
    """Kernel element w_n* = T phi_n of the linearization."""
    return t_isomorphism(flow, kernel_field(flow, n), source_mode=n)


def z_basis(flow: TrivialFlow, n: int) -> WavePair:
    """w~_n = (eta_{phi_n}, phi_n), spanning the complement of the range of L."""
    phi = kernel_field(flow, n)
    trace = phi.at_surface()
    return WavePair({k: -v / flow.psi0_s1 for k, v in trace.items()}, phi, n)


def apply_L(flow: TrivialFlow, phi: HarmonicField):
    """L phi = ([psi0_s phi_s - (psi0_ss + 1/psi0_s) phi]_{s=1}, (Delta - alpha) phi) as callables."""
    p1, R = flow.psi0_s1, flow.robin_coefficient
    alpha, kappa = flow.params.alpha, phi.kappa
    surf = {k: p1 * float(P.d1(1.0)) - R * float(P(1.0)) for k, P in phi.profiles.items()}

    def surface_fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, c in surf.items():
            out = out + c * np.cos(k * kappa * x)
        return out

    def interior_fn(x, s):
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        out = np.zeros(x.shape)
        for k, P in phi.profiles.items():
            out = out + (P.d2(s) - (alpha + (k * kappa) ** 2) * P(s)) * np.cos(k * kappa * x)
        return out

    return surface_fn, interior_fn


def project_Z(flow: TrivialFlow, modes, w, n_x: int | None = None) -> dict:
    """Coefficients <w, w~_n>_Y / ||w~_n||_Y^2 for every n in the kernel set."""
    mode_list = list(modes.modes if isinstance(modes, KernelSet) else modes)
    if not mode_list:
        raise DomainError("projection onto an empty kernel")
    kappa = flow.params.kappa
    out = {}
    for n in mode_list:
        wt = z_basis(flow, n)
        out[n] = ip_Y(w, wt, kappa, n_x=n_x) / ip_Y(wt, wt, kappa)
    return out


# ---------------------------------------------------------------------------------------------
# transversality pairings


def _cos2_weight(n: int, kappa: float) -> float:
    # int_0^{2pi/kappa} cos^2(n kappa x) dx
    return (2.0 if n == 0 else 1.0) * math.pi / kappa


def _require_mode(flow: TrivialFlow, n: int, modes: KernelSet | None) -> KernelSet:
    ks = modes if modes is not None else kernel_set(flow.params)
    if n not in ks.modes:
        raise DomainError(f"mode {n} is not in M(Lambda) = {list(ks.modes)}")
    return ks


def A_coefficient(flow: TrivialFlow) -> float:
    p = flow.params
    return -(2.0 * math.pi / (p.kappa * flow.psi0_s1**2)) * transversality_value(p)


def B_coefficient(flow: TrivialFlow) -> float:
    p = flow.params
    a = p.sqrt_abs_alpha
    return (math.pi / p.kappa) * (1.0 / (p.mu**2 * p.alpha**2 * math.sin(p.lam) ** 2)
                                  - 1.0 / (math.tan(p.lam) * 2.0 * a))


def _sinhc_sq_integral(theta_sq: float) -> float:
    """int_0^1 (sinh(theta s)/theta)^2 ds, stable through theta = 0."""
    z = theta_sq
    if abs(z) < 0.5:
        total, term_k = 0.0, 0.0
        # sum_k 4^k z^(k-1) / (2 (2k+1)!)
        for k in range(1, 30):
            term_k = 4.0**k * z ** (k - 1) / (2.0 * math.factorial(2 * k + 1))
            total += term_k
            if abs(term_k) < 1e-18 * abs(total):
                break
        return total
    if z > 0:
        t = math.sqrt(z)
        return (math.cosh(t) * math.sinh(t) - t) / (2.0 * t**3)
    y = math.sqrt(-z)
    return (y - math.sin(y) * math.cos(y)) / (2.0 * y**3)


def f_theta(theta_sq: float, kappa: float) -> float:
    """(pi/kappa) (t - cosh t sinh t)/(2 t^3) with the value -pi/(3 kappa) at t = 0."""
    return -(math.pi / kappa) * _sinhc_sq_integral(theta_sq)


def pairing_dlambda(flow: TrivialFlow, n: int, modes: KernelSet | None = None) -> float:
    """<D_lambda L phi_n, w~_n>_Y = A (sinh(theta_n)/theta_n)^2 (doubled for n = 0)."""
    _require_mode(flow, n, modes)
    p = flow.params
    s1 = branch_kernels(p.alpha + (n * p.kappa) ** 2, 1.0)[0]
    return A_coefficient(flow) * s1 * s1 * (2.0 if n == 0 else 1.0)


def pairing_dalpha(flow: TrivialFlow, n: int, modes: KernelSet | None = None) -> float:
    """<D_alpha L phi_n, w~_n>_Y = B (sinh(theta_n)/theta_n)^2 + f(theta_n) (doubled for n = 0)."""
    _require_mode(flow, n, modes)
    p = flow.params
    tsq = p.alpha + (n * p.kappa) ** 2
    s1 = branch_kernels(tsq, 1.0)[0]
    return (B_coefficient(flow) * s1 * s1 + f_theta(tsq, p.kappa)) * (2.0 if n == 0 else 1.0)


def pairing_dmu(flow: TrivialFlow, n: int, modes: KernelSet | None = None) -> float:
    """<D_mu L phi_n, w~_n>_Y = -2 pi sinhc(theta_n)^2 / (kappa mu psi0_s(1)^2)."""
    _require_mode(flow, n, modes)
    p = flow.params
    s1 = branch_kernels(p.alpha + (n * p.kappa) ** 2, 1.0)[0]
    return -2.0 * math.pi * s1 * s1 / (p.kappa * p.mu * flow.psi0_s1**2) * (2.0 if n == 0 else 1.0)


def dL_dparam(flow: TrivialFlow, phi: HarmonicField, name: str):
    """D_beta L(Lambda) phi for beta in {lambda, alpha, mu}, as (surface(x), interior(x, s))."""
    ds, dss = flow.param_derivative(name)
    p1 = flow.psi0_s1
    ds1, dss1 = float(ds(1.0)), float(dss(1.0))
    coef_robin = dss1 - ds1 / p1**2
    kappa = phi.kappa
    surf = {k: ds1 * float(P.d1(1.0)) - coef_robin * float(P(1.0)) for k, P in phi.profiles.items()}

    def surface_fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, c in surf.items():
            out = out + c * np.cos(k * kappa * x)
        return out

    if name == "alpha":
        def interior_fn(x, s):
            return -phi(x, s)
    else:
        def interior_fn(x, s):
            x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
            return np.zeros(x.shape)

    return surface_fn, interior_fn


def pairing_quadrature(flow: TrivialFlow, n: int, name: str) -> float:
    """<D_beta L phi_n, w~_n>_Y by direct quadrature (independent of the closed forms)."""
    phi = kernel_field(flow, n)
    return ip_Y(dL_dparam(flow, phi, name), z_basis(flow, n), flow.params.kappa,
                n_x=trapezoid_points(2 * n))


# ---------------------------------------------------------------------------------------------
# the determinant C


def _g_stable(theta_sq: float) -> float:
    """(l(theta) - 1)/theta^2, continuous at 0 with value 1/3."""
    z = theta_sq
    if abs(z) < 1e-3:
        return 1.0 / 3.0 - z / 45.0 + 2.0 * z * z / 945.0 - z**3 / 4725.0
    lv = l_of_theta_sq(z)
    if lv is None:
        raise DomainError("l is undefined at this theta")
    return (lv - 1.0) / z


@dataclass(frozen=True)
class DeterminantResult:
    value: float
    simplified: float
    matrix: tuple
    branch: str
    agreement: float
    tolerance: float
    scale: float

    @property
    def vanishes(self) -> bool:
        """C = 0 up to rounding relative to the size of the matrix products."""
        return abs(self.value) <= 1e-10 * self.scale


def determinant_C(flow: TrivialFlow, n1: int, n2: int, modes: KernelSet | None = None,
                  rtol: float = 1e-10) -> DeterminantResult:
    """2x2 determinant of the (lambda, alpha) pairings of modes n1 < n2, computed twice."""
    if not n1 < n2:
        raise DomainError("need n1 < n2")
    ks = modes if modes is not None else kernel_set(flow.params)
    for n in (n1, n2):
        _require_mode(flow, n, ks)
    p = flow.params
    matrix = ((pairing_dlambda(flow, n1, ks), pairing_dlambda(flow, n2, ks)),
              (pairing_dalpha(flow, n1, ks), pairing_dalpha(flow, n2, ks)))
    det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]

    A = A_coefficient(flow)
    t1, t2 = p.alpha + (n1 * p.kappa) ** 2, p.alpha + (n2 * p.kappa) ** 2
    s1 = branch_kernels(t1, 1.0)[0]
    s2 = branch_kernels(t2, 1.0)[0]
    r = ks.r
    # the general form is continuous through theta2 = 0; the closed branch is for theta2^2 = 0 up to rounding
    if abs(t2) <= 64.0 * np.finfo(float).eps * max(1.0, abs(p.alpha)):
        branch = "theta2=0"
        simplified = math.pi * A / (6.0 * p.kappa) * s1 * s1
        bracket = 1.0 / 3.0
    else:
        branch = "general"
        # r(r-1)(1/theta2^2 - 1/theta1^2) with (r-1)/theta2^2 taken through l(theta2), stable near 0
        l2 = l_of_theta_sq(t2)
        bracket = r * (_g_stable(t2) - (l2 - 1.0) / t1)
        simplified = math.pi * A / (2.0 * p.kappa) * s1 * s1 * s2 * s2 * bracket
    # mode 0 has twice the x-weight (int cos^2 = 2 pi/kappa), and both of its pairings carry it
    w0 = 2.0 if n1 == 0 else 1.0
    simplified *= w0
    f1, f2 = f_theta(t1, p.kappa), f_theta(t2, p.kappa)
    scale = w0 * abs(A) * (s1 * s1 * abs(f2) + s2 * s2 * abs(f1))
    # kernel-equation residual enters the simplified form multiplicatively
    lres = max(abs((l_of_theta_sq(t) or r) - r) for t in (t1, t2))
    tol = rtol * scale + 4.0 * w0 * lres * abs(math.pi * A / (2.0 * p.kappa)) * s1 * s1 * s2 * s2 * (
        1.0 + abs(bracket) + 1.0 / abs(t1))
    agreement = abs(det - simplified)
    if agreement > tol:
        raise VerificationError(f"determinant mismatch: matrix {det!r} vs simplified {simplified!r}")
    return DeterminantResult(det, simplified, matrix, branch, agreement, tol, scale)


# ---------------------------------------------------------------------------------------------
# derivatives of F at the trivial point


def _diag_form(order: int, flow: TrivialFlow, s, J: dict, surface: bool):
    """Diagonal form D^k F(0, Lambda) w^k from the closed-form expansions (pointwise)."""
    if surface:
        p = flow.psi0_s1
        eta, eta_x, f_s = J["eta"], J["eta_x"], J["f_s"]
        if order == 1:
            return (1.0 - p * p) * eta + p * f_s
        if order == 2:
            return 3 * p * p * eta**2 + p * p * eta_x**2 - 4 * p * eta * f_s + f_s**2
        return (-12 * p * p * eta**3 - 6 * p * p * eta * eta_x**2 + 18 * p * eta**2 * f_s
                + 6 * p * eta_x**2 * f_s - 6 * eta * f_s**2)
    ps, pss = flow.psi0_s(s), flow.psi0_ss(s)
    eta, eta_x, eta_xx = J["eta"], J["eta_x"], J["eta_xx"]
    f, f_s, f_ss, f_xs, f_xx = J["f"], J["f_s"], J["f_ss"], J["f_xs"], J["f_xx"]
    if order == 1:
        return -2 * pss * eta - s * ps * eta_xx + f_xx + f_ss - flow.params.alpha * f
    if order == 2:
        return (6 * pss * eta**2 + 2 * s * ps * eta * eta_xx + (4 * s * ps + 2 * s * s * pss) * eta_x**2
                - 4 * eta * f_ss - 4 * s * eta_x * f_xs - 2 * s * eta_xx * f_s)
    return (-24 * pss * eta**3 - 6 * s * ps * eta**2 * eta_xx - (24 * s * ps + 12 * s * s * pss) * eta * eta_x**2
            + 18 * eta**2 * f_ss + 12 * s * eta * eta_x * f_xs + 6 * s * eta * eta_xx * f_s
            + 12 * s * eta_x**2 * f_s + 6 * s * s * eta_x**2 * f_ss)


def _combine_jets(jet_list, signs):
    out = {}
    for key in jet_list[0]:
        out[key] = sum(sg * J[key] for sg, J in zip(signs, jet_list))
    return out


def _polarized(order: int, flow: TrivialFlow, s, jet_list, surface: bool):
    if order == 1:
        return _diag_form(1, flow, s, jet_list[0], surface)
    if order == 2:
        plus = _diag_form(2, flow, s, _combine_jets(jet_list, (1, 1)), surface)
        minus = _diag_form(2, flow, s, _combine_jets(jet_list, (1, -1)), surface)
        return (plus - minus) / 4.0
    total = 0.0
    for eps in itertools.product((1, -1), repeat=3):
        total = total + eps[0] * eps[1] * eps[2] * _diag_form(3, flow, s, _combine_jets(jet_list, eps), surface)
    return total / 48.0


def appendix_derivatives(flow: TrivialFlow, inputs, order: int):
    """Symmetric multilinear D^k_w F(0, Lambda)(w_1, ..., w_k) as (surface(x), interior(x, s)).

    The diagonal forms are the closed-form expansions; mixed arguments come from polarization.
    The surface callable is evaluated at s = 1.
    """
    if order not in (1, 2, 3):
        raise DomainError("order must be 1, 2 or 3")
    inputs = list(inputs)
    if len(inputs) != order:
        raise DomainError(f"order {order} needs exactly {order} inputs")

    def surface_fn(x):
        x = np.asarray(x, dtype=float)
        jets = [w.jets(x, np.ones_like(x)) for w in inputs]
        return _polarized(order, flow, np.ones_like(x), jets, True)

    def interior_fn(x, s):
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        jets = [w.jets(x, s) for w in inputs]
        return _polarized(order, flow, s, jets, False)

    return surface_fn, interior_fn


# ---------------------------------------------------------------------------------------------
# second-order data


@dataclass(frozen=True)
class HarmonicCoefficients:
    c0: float
    c2: float
    b0: Callable
    b2: Callable
    base_mode: int
    stray_harmonics: float = 0.0


def second_order_data(flow: TrivialFlow, n: int, modes: KernelSet | None = None,
                      check_nodes: int = 17) -> HarmonicCoefficients:
    """Harmonic split c0 + c2 cos(2n kappa x), b0(s) + b2(s) cos(2n kappa x) of D^2F(w*, w*)."""
    _require_mode(flow, n, modes)
    if n < 1:
        raise DomainError("the base mode must be positive")
    kappa = flow.params.kappa
    ws = w_star(flow, n)
    surf, inter = appendix_derivatives(flow, [ws, ws], 2)
    n_x = trapezoid_points(2 * n)
    x, _ = periodic_grid(kappa, n_x)
    sv = surf(x)
    c0 = float(cosine_coefficient(sv, x, 0, kappa))
    c2 = float(cosine_coefficient(sv, x, 2 * n, kappa))

    def _b(k):
        def b(s):
            s = np.asarray(s, dtype=float)
            X, S = np.meshgrid(x, np.atleast_1d(s), indexing="ij")
            out = cosine_coefficient(inter(X, S), x, k, kappa)
            return out.reshape(s.shape)
        return b

    # everything outside harmonics 0 and 2n must vanish
    s_chk = np.linspace(0.0, 1.0, check_nodes)
    X, S = np.meshgrid(x, s_chk, indexing="ij")
    iv = inter(X, S)
    stray = 0.0
    for k in range(1, n_x // 2):
        if k == 2 * n:
            continue
        stray = max(stray, abs(float(cosine_coefficient(sv, x, k, kappa))),
                    float(np.max(np.abs(cosine_coefficient(iv, x, k, kappa)))))
    return HarmonicCoefficients(c0, c2, _b(0), _b(2 * n), n, stray)


@dataclass(frozen=True)
class ModeBvpSolution:
    a: Profile
    theta_sq: float
    boundary_residual: float
    interior_residual: float
    nodes: np.ndarray
    values: np.ndarray


def solve_mode_bvp(theta_sq: float, b, c: float, flow: TrivialFlow, n_points: int = 48,
                   resonance_tol: float = 1e-10) -> ModeBvpSolution:
    """Chebyshev collocation for a'' - theta^2 a = -b, a(0) = 0,
    psi0_s(1) a'(1) - (psi0_ss(1) + 1/psi0_s(1)) a(1) = -c.
    """
    if n_points < 8:
        raise DomainError("need at least 8 collocation points")
    p1, R = flow.psi0_s1, flow.robin_coefficient
    # the homogeneous problem is solved by sinhc(theta s) exactly when p cosh(theta) = R sinhc(theta)
    sh, ch = branch_kernels(theta_sq, 1.0)
    indicator = abs(p1 * ch - R * sh) / (abs(p1 * ch) + abs(R * sh))
    if indicator < resonance_tol:
        raise SolvabilityError(f"theta^2={theta_sq!r} is resonant with the homogeneous Robin problem")
    s, D, D2 = cheb_unit(n_points)
    bv = np.asarray(b(s), dtype=float) if callable(b) else np.broadcast_to(np.asarray(b, dtype=float), s.shape)
    M = D2 - theta_sq * np.eye(n_points)
    rhs = -bv.copy()
    M[0, :] = 0.0
    M[0, 0] = 1.0
    rhs[0] = 0.0
    M[-1, :] = p1 * D[-1, :]
    M[-1, -1] -= R
    rhs[-1] = -c
    try:
        vals = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolvabilityError(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise SolvabilityError("non-finite collocation solution")
    interior = float(np.max(np.abs((D2 @ vals - theta_sq * vals + bv)[1:-1])))
    bres = float(p1 * (D[-1] @ vals) - R * vals[-1] + c)
    return ModeBvpSolution(Profile.from_cheb(vals), theta_sq, bres, interior, s, vals)


@dataclass(frozen=True)
class CurveJet:
    lambda_dot: float
    lambda_ddot: float
    mu_ddot: float
    zeta: HarmonicField
    a0: ModeBvpSolution
    a2: ModeBvpSolution
    harmonics: HarmonicCoefficients
    numerator_terms: dict
    denominator: float
    ratio_residual: float
    lambda_dot_numerator: float

    @property
    def w_ddot(self):
        """Harmonic parts (a0, a2) of zeta, where T zeta is the second derivative of the curve."""
        return {"a0": self.a0.a, "a2": self.a2.a}


def curve_jet(flow: TrivialFlow, n: int, n_points: int = 48) -> CurveJet:
    """Second-order data of the one-dimensional bifurcation curve through (0, Lambda*)."""
    ks = kernel_set(flow.params)
    if tuple(ks.modes) != (n,):
        raise DomainError(f"curve_jet needs M(Lambda) = {{{n}}}, found {list(ks.modes)}")
    if n < 1:
        # a flat-surface mode: D^2F(w*, w*) has a constant part, so lambda_dot need not vanish
        raise DomainError("curve_jet needs a wave mode n >= 1")
    if not transversality_ok(flow.params):
        raise TransversalityError("transversality condition fails at the base point")
    p = flow.params
    kappa = p.kappa
    ws = w_star(flow, n)
    wt = z_basis(flow, n)
    n_x = trapezoid_points(4 * n)

    # first order: <D^2F(w*)^2, w~> vanishes by harmonic parity
    d2 = appendix_derivatives(flow, [ws, ws], 2)
    num1 = ip_Y(d2, wt, kappa, n_x=n_x)
    den_lambda = pairing_dlambda(flow, n, ks)
    scale1 = abs(ip_Y((lambda x: np.abs(d2[0](x)), lambda x, s: np.abs(d2[1](x, s))),
                      (lambda x: np.abs(wt.eta(x)), lambda x, s: np.abs(wt.phi_hat(x, s))), kappa, n_x=n_x))
    if abs(num1) > 1e-12 * max(scale1, 1.0):
        raise VerificationError(f"first-order numerator does not vanish: {num1!r}")

    hc = second_order_data(flow, n, ks)
    bvp0 = solve_mode_bvp(p.alpha, hc.b0, hc.c0, flow, n_points)
    bvp2 = solve_mode_bvp(p.alpha + (2 * n * kappa) ** 2, hc.b2, hc.c2, flow, n_points)
    zeta = HarmonicField({0: bvp0.a, 2 * n: bvp2.a}, kappa)
    tz = t_isomorphism(flow, zeta)

    cubic = ip_Y(appendix_derivatives(flow, [ws, ws, ws], 3), wt, kappa, n_x=n_x)
    mixed = ip_Y(appendix_derivatives(flow, [ws, tz], 2), wt, kappa, n_x=n_x)
    numerator = cubic + 3.0 * mixed
    denominator = 3.0 * den_lambda
    lambda_ddot = -numerator / denominator

    # mu as bifurcation parameter: same numerator, D_mu pairing by quadrature
    den_mu = 3.0 * pairing_quadrature(flow, n, "mu")
    mu_ddot = -numerator / den_mu
    predicted = mu_ddot / (p.mu * transversality_value(p))
    ratio_residual = abs(lambda_ddot - predicted) / max(1.0, abs(lambda_ddot))

    return CurveJet(0.0, lambda_ddot, mu_ddot, zeta, bvp0, bvp2, hc,
                    {"cubic": cubic, "mixed": mixed, "three_mixed": 3.0 * mixed, "numerator": numerator},
                    denominator, ratio_residual, num1)


# ---------------------------------------------------------------------------------------------
# two-mode sheets: first-order data


@dataclass(frozen=True)
class SheetGradients:
    """Quantities entering the r-derivatives of alpha and lambda along a two-mode sheet."""

    n1: int
    n2: int
    P: dict  # (l, i, j) -> <D^2F(w_i, w_j), w~_l> / ||w~_l||^2
    psi_beta: dict  # (j, beta) -> pairing / ||w~_j||^2
    divides: bool

    def psi_r(self, v: float) -> tuple[float, float]:
        P = self.P
        c, s = math.cos(v), math.sin(v)
        if not self.divides:
            return 0.0, 0.0
        psi1 = 0.5 * c * P[1, 1, 1] + s * P[1, 1, 2]
        psi2 = 0.5 * c * c * P[2, 1, 1] + 0.5 * s * s * P[2, 2, 2] + s * c * P[2, 1, 2]
        return psi1, psi2

    def matrix(self, v: float) -> np.ndarray:
        sv = math.sin(v) if self.divides else 1.0
        pb = self.psi_beta
        return np.array([[pb[1, "alpha"], pb[1, "lambda"]],
                         [sv * pb[2, "alpha"], sv * pb[2, "lambda"]]])

    def slopes(self, v: float) -> tuple[float, float]:
        """(alpha_r, lambda_r) at r = 0 in direction v (case n1 | n2); zeros otherwise."""
        rhs = -np.array(self.psi_r(v))
        sol = np.linalg.solve(self.matrix(v), rhs)
        return float(sol[0]), float(sol[1])


def sheet_gradients(flow: TrivialFlow, n1: int, n2: int) -> SheetGradients:
    ks = kernel_set(flow.params)
    for n in (n1, n2):
        _require_mode(flow, n, ks)
    kappa = flow.params.kappa
    w = {1: w_star(flow, n1), 2: w_star(flow, n2)}
    wt = {1: z_basis(flow, n1), 2: z_basis(flow, n2)}
    norms = {j: ip_Y(wt[j], wt[j], kappa) for j in (1, 2)}
    n_x = trapezoid_points(3 * n2)
    P = {}
    for l in (1, 2):
        for i, j in ((1, 1), (1, 2), (2, 2)):
            form = appendix_derivatives(flow, [w[i], w[j]], 2)
            P[l, i, j] = ip_Y(form, wt[l], kappa, n_x=n_x) / norms[l]
            P[l, j, i] = P[l, i, j]
    modes = {1: n1, 2: n2}
    psi_beta = {}
    for j in (1, 2):
        psi_beta[j, "lambda"] = pairing_dlambda(flow, modes[j], ks) / norms[j]
        psi_beta[j, "alpha"] = pairing_dalpha(flow, modes[j], ks) / norms[j]
    return SheetGradients(n1, n2, P, psi_beta, n2 % n1 == 0)
