"""Discretized flattened system, amplitude-constrained Newton, curve and sheet continuation.

Unknowns are cosine coefficients in x (Galerkin) times Chebyshev node values in s.  The residual
is evaluated pointwise on an oversampled midpoint grid in x and projected back onto the cosine
modes.  The Jacobian is exact: pointwise partials of the residual with respect to each jet come
from a complex step, and the jets depend linearly on the unknowns.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from . import flattened
from .asymptotics import determinant_C, sheet_gradients
from .errors import (DivergenceError, DomainError, SingularJacobianError, TransversalityError,
                     VerificationError)
from .kernel import kernel_set, transversality_ok, transversality_value
from .spectral import cheb_unit, clenshaw_curtis_unit
from .trivial import TrivialParameters, branch_kernels, make_trivial_flow

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-11
BRANCH_TOL = 1e-10
MAX_NEWTON = 25
MIN_DAMPING = 2.0**-10
RCOND_MIN = 1e-15
_CSTEP = 1e-30
PARAM_ORDER = ("alpha", "lambda", "mu")


@dataclass(frozen=True)
class Discretization:
    """n_x cosine modes in x, n_s Chebyshev-Lobatto nodes in s (endpoints included)."""

    n_x: int = 16
    n_s: int = 48
    kappa: float = 1.0
    oversample: int = 3

    def __post_init__(self):
        if self.n_x < 2 or self.n_s < 8:
            raise DomainError("need n_x >= 2 and n_s >= 8")
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")

    @cached_property
    def s(self) -> np.ndarray:
        return cheb_unit(self.n_s)[0]

    @cached_property
    def D(self) -> np.ndarray:
        return cheb_unit(self.n_s)[1]

    @cached_property
    def D2(self) -> np.ndarray:
        return cheb_unit(self.n_s)[2]

    @cached_property
    def cc_weights(self) -> np.ndarray:
        return clenshaw_curtis_unit(self.n_s)

    @cached_property
    def x_nodes(self) -> np.ndarray:
        """Midpoint nodes on the half period [0, pi/kappa]."""
        m = self.oversample * self.n_x
        return (np.arange(m) + 0.5) * math.pi / (self.kappa * m)

    @cached_property
    def _cos_ops(self):
        k = np.arange(self.n_x) * self.kappa
        arg = np.outer(self.x_nodes, k)
        C = np.cos(arg)
        Cx = -np.sin(arg) * k
        Cxx = -C * k * k
        m = self.x_nodes.size
        P = (2.0 / m) * C.T.copy()
        P[0] *= 0.5
        return C, Cx, Cxx, P

    @property
    def C(self):
        return self._cos_ops[0]

    @property
    def Cx(self):
        return self._cos_ops[1]

    @property
    def Cxx(self):
        return self._cos_ops[2]

    @property
    def P(self):
        """Projection of half-period samples onto cosine coefficients."""
        return self._cos_ops[3]

    @property
    def n_unknowns_w(self) -> int:
        return self.n_x * (self.n_s + 1)

    def y_norm(self, eta_coeffs, phi_values) -> float:
        """Y norm of (eta, phi_hat) over one full period."""
        e = np.asarray(eta_coeffs, dtype=float)
        f = np.asarray(phi_values, dtype=float)
        mult = np.ones(self.n_x)
        mult[0] = 2.0
        total = np.sum(mult * e * e) + np.sum(mult[:, None] * f * f * self.cc_weights[None, :])
        return math.sqrt(math.pi / self.kappa * total)


@dataclass(frozen=True)
class DiscreteWaveState:
    """w = (eta, phi_hat) with eta = sum_k E_k cos(k kappa x), phi_hat = sum_k Phi_k(s) cos(k kappa x).

    ``phi_hat_values[k, i]`` is Phi_k at the i-th Chebyshev node.  ``base`` and ``modes`` fix the
    amplitude coordinates; ``amplitude`` holds their prescribed values.
    """

    eta_coeffs: np.ndarray
    phi_hat_values: np.ndarray
    params: TrivialParameters
    amplitude: tuple
    base: TrivialParameters
    modes: tuple
    residual_norm: float = float("nan")
    history: tuple = ()

    def eta(self, x, kappa: float):
        x = np.asarray(x, dtype=float)
        k = np.arange(self.eta_coeffs.size) * kappa
        return np.cos(np.multiply.outer(x, k)) @ self.eta_coeffs

    def min_depth(self, kappa: float, n: int = 512) -> float:
        x = np.linspace(0.0, math.pi / kappa, n)
        return float(np.min(1.0 + self.eta(x, kappa)))


# ---------------------------------------------------------------------------------------------
# base-flow profiles for possibly complex parameters


def _base_profiles(mu, alpha, lam, s):
    a = np.sqrt(-alpha + 0j) if np.iscomplexobj(alpha) else math.sqrt(-alpha)
    ph = a * (s - 1.0) + lam
    psi0 = mu * np.cos(ph)
    psi0_s = -mu * a * np.sin(ph)
    psi0_ss = alpha * psi0
    p1 = -mu * a * np.sin(lam)
    Q = -0.5 * mu * mu * alpha * np.sin(lam) ** 2
    return psi0, psi0_s, psi0_ss, p1, Q


def _jets(disc: Discretization, E, Phi):
    F = disc.C @ Phi
    Fx = disc.Cx @ Phi
    return {
        "eta": disc.C @ E, "eta_x": disc.Cx @ E, "eta_xx": disc.Cxx @ E,
        "f": F, "f_s": F @ disc.D.T, "f_ss": F @ disc.D2.T,
        "f_x": Fx, "f_xs": Fx @ disc.D.T, "f_xx": disc.Cxx @ Phi,
    }


def _pointwise(disc: Discretization, jets, mu, alpha, lam):
    """Surface residual (n_q,) and interior residual (n_q, n_s - 2) at the x nodes."""
    s_in = disc.s[1:-1]
    psi0, psi0_s, psi0_ss, p1, Q = _base_profiles(mu, alpha, lam, s_in)
    ij = {k: (v[:, None] if v.ndim == 1 else v[:, 1:-1]) for k, v in jets.items()}
    F2 = flattened.interior_residual(s_in[None, :], psi0[None, :], psi0_s[None, :], psi0_ss[None, :],
                                     alpha, ij)
    sj = {"eta": jets["eta"], "eta_x": jets["eta_x"], "f_s": jets["f_s"][:, -1]}
    F1 = flattened.surface_residual(p1, Q, sj)
    return F1, F2


# ---------------------------------------------------------------------------------------------
# amplitude coordinates


def discrete_w_star(disc: Discretization, base: TrivialParameters, n: int):
    """Coefficients of T(base) phi_n on the grid: (E, Phi)."""
    flow = make_trivial_flow(base)
    tsq = base.alpha + (n * disc.kappa) ** 2
    sh1 = float(branch_kernels(tsq, 1.0)[0])
    p1 = flow.psi0_s1
    E = np.zeros(disc.n_x)
    Phi = np.zeros((disc.n_x, disc.n_s))
    E[n] = -sh1 / p1
    s = disc.s
    Phi[n] = branch_kernels(tsq, s)[0] - s * flow.psi0_s(s) / p1 * sh1
    Phi[n, 0] = Phi[n, -1] = 0.0
    return E, Phi


def coordinate_weights(disc: Discretization, base: TrivialParameters, n: int):
    """Linear functional w -> <w, w~_n>_Y / <w_n*, w~_n>_Y as weights on (E, Phi)."""
    if not 1 <= n < disc.n_x:
        raise DomainError(f"mode {n} is not resolved by n_x = {disc.n_x}")
    flow = make_trivial_flow(base)
    tsq = base.alpha + (n * disc.kappa) ** 2
    e_t = -float(branch_kernels(tsq, 1.0)[0]) / flow.psi0_s1
    phi_t = branch_kernels(tsq, disc.s)[0]
    gE = np.zeros(disc.n_x)
    gP = np.zeros((disc.n_x, disc.n_s))
    gE[n] = e_t
    gP[n] = disc.cc_weights * phi_t
    Ew, Pw = discrete_w_star(disc, base, n)
    den = float(gE @ Ew + np.sum(gP * Pw))
    return gE / den, gP / den


# ---------------------------------------------------------------------------------------------
# the discrete problem


class _Problem:
    """Residual and Jacobian in packed unknowns z = [E, Phi.ravel(), active params]."""

    def __init__(self, disc: Discretization, base: TrivialParameters, modes, active, fixed_params):
        self.disc = disc
        self.base = base
        self.modes = tuple(modes)
        self.active = tuple(p for p in PARAM_ORDER if p in active)
        self.fixed = dict(fixed_params)
        self.weights = [coordinate_weights(disc, base, n) for n in self.modes]
        nx, ns = disc.n_x, disc.n_s
        self.nw = nx * (ns + 1)
        self.n = self.nw + len(self.active)
        if len(self.weights) != len(self.active):
            raise DomainError("need as many amplitude constraints as active parameters")

    def unpack(self, z):
        nx, ns = self.disc.n_x, self.disc.n_s
        E = z[:nx]
        Phi = z[nx:self.nw].reshape(nx, ns)
        prm = dict(self.fixed)
        prm.update({name: z[self.nw + i] for i, name in enumerate(self.active)})
        return E, Phi, prm

    def pack(self, E, Phi, params: TrivialParameters):
        vals = {"alpha": params.alpha, "lambda": params.lam, "mu": params.mu}
        return np.concatenate([E, Phi.ravel(), [vals[p] for p in self.active]])

    def coordinates(self, E, Phi):
        return np.array([gE @ E + np.sum(gP * Phi) for gE, gP in self.weights])

    def residual(self, z, amplitude, check_domain=True):
        disc = self.disc
        E, Phi, prm = self.unpack(z)
        jets = _jets(disc, E, Phi)
        if check_domain and not np.iscomplexobj(z):
            if np.min(1.0 + jets["eta"]) <= 0:
                raise DomainError("surface touches the bed: min(1 + eta) <= 0")
        F1, F2 = _pointwise(disc, jets, prm["mu"], prm["alpha"], prm["lambda"])
        return np.concatenate([disc.P @ F1, (disc.P @ F2).ravel(), Phi[:, 0], Phi[:, -1],
                               self.coordinates(E, Phi) - np.asarray(amplitude)])

    def jacobian(self, z):
        disc = self.disc
        nx, ns = disc.n_x, disc.n_s
        E, Phi, prm = self.unpack(z)
        jets = _jets(disc, E, Phi)
        mu, alpha, lam = prm["mu"], prm["alpha"], prm["lambda"]
        # pointwise partials by complex step, one jet at a time
        d1, d2 = {}, {}
        for key in flattened.JET_KEYS:
            pert = dict(jets)
            pert[key] = jets[key] + 1j * _CSTEP
            F1, F2 = _pointwise(disc, pert, mu, alpha, lam)
            d1[key] = F1.imag / _CSTEP
            d2[key] = F2.imag / _CSTEP
        I = np.eye(ns)
        ops = {"f": (disc.C, I), "f_s": (disc.C, disc.D), "f_ss": (disc.C, disc.D2),
               "f_x": (disc.Cx, I), "f_xs": (disc.Cx, disc.D), "f_xx": (disc.Cxx, I)}
        eops = {"eta": disc.C, "eta_x": disc.Cx, "eta_xx": disc.Cxx}
        P = disc.P
        n_in = ns - 2
        J = np.zeros((self.n, self.n))
        r_surf = slice(0, nx)
        r_int = slice(nx, nx + nx * n_in)
        c_E = slice(0, nx)
        c_P = slice(nx, self.nw)
        # interior rows
        JiP = np.zeros((nx, n_in, nx, ns))
        for key, (X, S) in ops.items():
            JiP += np.einsum("kq,qi,ql,im->kilm", P, d2[key], X, S[1:-1], optimize=True)
        J[r_int, c_P] = JiP.reshape(nx * n_in, nx * ns)
        JiE = np.zeros((nx, n_in, nx))
        for key, X in eops.items():
            JiE += np.einsum("kq,qi,ql->kil", P, d2[key], X, optimize=True)
        J[r_int, c_E] = JiE.reshape(nx * n_in, nx)
        # surface rows: F1 depends on eta, eta_x and f_s at s = 1
        J[r_surf, c_E] = P @ (d1["eta"][:, None] * disc.C + d1["eta_x"][:, None] * disc.Cx)
        JsP = np.einsum("kq,q,ql,m->klm", P, d1["f_s"], disc.C, disc.D[-1])
        J[r_surf, c_P] = JsP.reshape(nx, nx * ns)
        # pinning rows
        row = nx + nx * n_in
        for k in range(nx):
            J[row + k, nx + k * ns] = 1.0
            J[row + nx + k, nx + k * ns + ns - 1] = 1.0
        row += 2 * nx
        for j, (gE, gP) in enumerate(self.weights):
            J[row + j, c_E] = gE
            J[row + j, c_P] = gP.ravel()
        # active parameter columns
        for i, name in enumerate(self.active):
            prm_c = {"mu": mu, "alpha": alpha, "lambda": lam}
            prm_c[name] = prm_c[name] + 1j * _CSTEP
            F1, F2 = _pointwise(disc, jets, prm_c["mu"], prm_c["alpha"], prm_c["lambda"])
            col = np.concatenate([P @ F1.imag, (P @ F2.imag).ravel()]) / _CSTEP
            J[:nx + nx * n_in, self.nw + i] = col
        return J


def _state_from(problem: _Problem, z, amplitude, residual_norm, history) -> DiscreteWaveState:
    E, Phi, prm = problem.unpack(np.real(z))
    params = TrivialParameters(float(prm["mu"]), float(prm["alpha"]), float(prm["lambda"]),
                               problem.disc.kappa)
    return DiscreteWaveState(np.array(E, dtype=float), np.array(Phi, dtype=float), params,
                             tuple(float(a) for a in amplitude), problem.base, problem.modes,
                             float(residual_norm), tuple(history))


def _problem_for(disc, state: DiscreteWaveState, fixed) -> _Problem:
    active = [p for p in PARAM_ORDER if p not in fixed]
    fixed_vals = {"alpha": state.params.alpha, "lambda": state.params.lam, "mu": state.params.mu}
    return _Problem(disc, state.base, state.modes, active, fixed_vals)


def assemble_residual(disc: Discretization, state: DiscreteWaveState, fixed=("mu", "alpha")) -> np.ndarray:
    """Stacked residual: surface rows, interior rows, pinning rows, amplitude constraints."""
    if state.phi_hat_values.shape != (disc.n_x, disc.n_s):
        raise DomainError("state does not match the discretization")
    prob = _problem_for(disc, state, fixed)
    z = prob.pack(state.eta_coeffs, state.phi_hat_values, state.params)
    return prob.residual(z, state.amplitude)


def _rcond(J) -> float:
    # row equilibration so the estimate reflects the problem, not the row scaling
    scale = np.max(np.abs(J), axis=1)
    scale[scale == 0] = 1.0
    Js = J / scale[:, None]
    lu, piv = lu_factor(Js, check_finite=False)
    anorm = np.linalg.norm(Js, 1)
    rc, info = lapack.dgecon(lu, anorm, norm="1")
    return float(rc), (lu, piv), scale


def newton_correct(disc: Discretization, state: DiscreteWaveState, fixed=("mu", "alpha"), *,
                   tol: float = NEWTON_TOL, max_iter: int = MAX_NEWTON,
                   accept_tol: float = BRANCH_TOL) -> DiscreteWaveState:
    """Damped Newton on (eta, phi_hat, active parameters) with the amplitude(s) held fixed.

    Armijo backtracking with factor 1/2 down to 2^-10.  Raises DivergenceError when the residual
    stays above ``accept_tol``, SingularJacobianError when the Jacobian is singular to working
    precision and TransversalityError when lambda is the only active parameter but does not cross
    the kernel transversally.
    """
    prob = _problem_for(disc, state, fixed)
    if prob.active == ("lambda",) and not transversality_ok(state.base):
        tv = transversality_value(state.base)
        raise TransversalityError(f"transversality fails at the base point (value {tv:.3e}); "
                                  "the lambda column has no component along the kernel", 0.0, [])
    z = prob.pack(state.eta_coeffs, state.phi_hat_values, state.params)
    amp = state.amplitude
    R = prob.residual(z, amp)
    res = float(np.max(np.abs(R)))
    history = [res]
    if res <= tol:
        return _state_from(prob, z, amp, res, history)
    for it in range(max_iter):
        J = prob.jacobian(z)
        rc, lu, scale = _rcond(J)
        if not rc > RCOND_MIN:
            raise SingularJacobianError(f"Jacobian singular (rcond {rc:.2e}): fold or branch point",
                                        res, history)
        dz = -lu_solve(lu, R / scale, check_finite=False)
        step, merit = 1.0, float(np.linalg.norm(R))
        while step >= MIN_DAMPING:
            try:
                R_new = prob.residual(z + step * dz, amp)
            except DomainError:
                R_new = None
            if R_new is not None and np.all(np.isfinite(R_new)) and \
                    np.linalg.norm(R_new) <= (1.0 - 1e-4 * step) * merit:
                break
            step *= 0.5
        else:
            # no decrease possible: accepted only at the rounding floor
            if res <= accept_tol:
                break
            raise DivergenceError(f"line search failed at iteration {it}, residual {res:.3e}", res, history)
        z = z + step * dz
        R = R_new
        res = float(np.max(np.abs(R)))
        history.append(res)
        log.debug("newton %d: step %.3g residual %.3e", it, step, res)
        if res <= tol:
            break
    if res > accept_tol:
        raise DivergenceError(f"no convergence in {max_iter} iterations, residual {res:.3e}", res, history)
    return _state_from(prob, z, amp, res, history)


# ---------------------------------------------------------------------------------------------
# branches


@dataclass(frozen=True)
class BranchPoint:
    amplitude: tuple
    state: DiscreteWaveState
    residual_norm: float
    parameters: dict
    polar: tuple | None = None


@dataclass
class ContinuationBranch:
    points: list
    base_point: TrivialParameters
    mode: tuple
    disc: Discretization
    kind: str = "curve"
    stopped: str | None = None

    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude[0] if self.kind == "curve" else p.polar[0] for p in self.points])

    def lambdas(self) -> np.ndarray:
        return np.array([p.parameters["lambda"] for p in self.points])

    def alphas(self) -> np.ndarray:
        return np.array([p.parameters["alpha"] for p in self.points])


def trivial_state(disc: Discretization, base: TrivialParameters, modes, amplitude=None) -> DiscreteWaveState:
    modes = tuple(modes)
    amp = tuple(amplitude) if amplitude is not None else (0.0,) * len(modes)
    return DiscreteWaveState(np.zeros(disc.n_x), np.zeros((disc.n_x, disc.n_s)), base, amp, base,
                             modes, 0.0, (0.0,))


def _point(state: DiscreteWaveState, polar=None) -> BranchPoint:
    return BranchPoint(state.amplitude, state, state.residual_norm,
                       {"mu": state.params.mu, "alpha": state.params.alpha, "lambda": state.params.lam},
                       polar)


def _check_disc(disc, base) -> Discretization:
    if disc is None:
        return Discretization(kappa=base.kappa)
    if abs(disc.kappa - base.kappa) > 1e-15 * max(1.0, base.kappa):
        raise DomainError("discretization kappa differs from the base point")
    return disc


def continue_curve_1d(base: TrivialParameters, n: int, t_max: float, steps: int,
                      disc: Discretization | None = None, *, tol: float = NEWTON_TOL) -> ContinuationBranch:
    """Branch of nontrivial solutions bifurcating from mode n, with lambda free.

    Points t_k = k t_max / steps; predictor t w* with the previous lambda.
    """
    base.validate()
    disc = _check_disc(disc, base)
    ks = kernel_set(base)
    if tuple(ks.modes) != (n,) or n < 1:
        raise DomainError(f"need M(base) = {{{n}}} with n >= 1, found {list(ks.modes)}")
    if not transversality_ok(base):
        raise TransversalityError("transversality fails at the base point", 0.0, [])
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    branch = ContinuationBranch([_point(trivial_state(disc, base, (n,)))], base, (n,), disc, "curve")
    if t_max == 0 or steps == 0:
        return branch
    Ew, Pw = discrete_w_star(disc, base, n)
    lam_prev = [base.lam]
    for k in range(1, steps + 1):
        t = t_max * k / steps
        # quadratic extrapolation in t^2 once two points exist (lambda is even in t)
        lam_guess = lam_prev[-1] if len(lam_prev) < 2 else lam_prev[-1] + (lam_prev[-1] - lam_prev[-2]) * (
            (t**2 - (t - t_max / steps) ** 2) / max((t - t_max / steps) ** 2 - (t - 2 * t_max / steps) ** 2, 1e-300))
        pred = DiscreteWaveState(t * Ew, t * Pw, base.replace(lam=lam_guess), (t,), base, (n,))
        try:
            sol = newton_correct(disc, pred, ("mu", "alpha"), tol=tol)
        except DomainError as exc:
            branch.stopped = str(exc)
            break
        branch.points.append(_point(sol))
        lam_prev.append(sol.params.lam)
    return branch


# ---------------------------------------------------------------------------------------------
# two-mode sheets


def sheet_threads() -> int:
    try:
        return max(1, int(os.environ.get("WAVEKIT_THREADS", "1")))
    except ValueError:
        return 1


def _divided_solve(disc, base, modes, t, guess, *, tol, max_outer=30):
    """Sheet point with one vanishing coordinate, via the divided reduced equations.

    With t_j = 0 the full system is singular in (alpha, lambda): the reduced equation for mode j
    holds identically.  The reduced function divided by t_j is its t_j-derivative there, which
    comes from one bordered linear solve.  The outer loop solves the two divided equations for
    (alpha, lambda); the inner loop solves the bordered system with the parameters frozen.
    """
    nx, ns = disc.n_x, disc.n_s
    zero = [j for j in range(2) if t[j] == 0.0]
    nz = [j for j in range(2) if t[j] != 0.0]
    if len(zero) != 1:
        raise DomainError("divided solve needs exactly one vanishing coordinate")
    j0, j1 = zero[0], nz[0]

    # Y-representatives of the complement directions in residual space
    bvec = []
    for n in modes:
        flow = make_trivial_flow(base)
        tsq = base.alpha + (n * disc.kappa) ** 2
        b = np.zeros(nx + nx * (ns - 2))
        b[n] = -float(branch_kernels(tsq, 1.0)[0]) / flow.psi0_s1
        bi = np.zeros((nx, ns - 2))
        bi[n] = branch_kernels(tsq, disc.s[1:-1])[0]
        b[nx:] = bi.ravel()
        bvec.append(b)

    def inner(alpha, lam, z0):
        fixed = {"alpha": alpha, "lambda": lam, "mu": base.mu}
        prob = _Problem(disc, base, modes, ("alpha", "lambda"), fixed)
        nw = prob.nw
        npde = nx + nx * (ns - 2)

        def full(zz):
            zfull = np.concatenate([zz[:nw], [alpha, lam]])
            R = prob.residual(zfull, t)
            R[:npde] -= zz[nw] * bvec[0] + zz[nw + 1] * bvec[1]
            return R, zfull

        zz = z0.copy()
        R, zfull = full(zz)
        for _ in range(MAX_NEWTON):
            Jf = prob.jacobian(zfull)
            Jb = Jf.copy()
            Jb[:npde, nw] = -bvec[0]
            Jb[:npde, nw + 1] = -bvec[1]
            Jb[npde:, nw:] = 0.0
            lu = lu_factor(Jb, check_finite=False)
            zz = zz - lu_solve(lu, R, check_finite=False)
            R, zfull = full(zz)
            if np.max(np.abs(R)) <= 1e-13:
                break
        # derivative of sigma_{j0} with respect to t_{j0}
        rhs = np.zeros(prob.n)
        rhs[npde + 2 * nx + j0] = 1.0
        Jf = prob.jacobian(zfull)
        Jb = Jf.copy()
        Jb[:npde, nw] = -bvec[0]
        Jb[:npde, nw + 1] = -bvec[1]
        Jb[npde:, nw:] = 0.0
        dz = np.linalg.solve(Jb, rhs)
        psi = np.empty(2)
        psi[j0] = dz[nw + j0]
        psi[j1] = zz[nw + j1] / t[j1]
        return psi, zz, prob

    Ew = np.zeros(nx)
    Pw = np.zeros((nx, ns))
    for j, n in enumerate(modes):
        e, p = discrete_w_star(disc, base, n)
        Ew += t[j] * e
        Pw += t[j] * p
    z0 = np.concatenate([Ew, Pw.ravel(), [0.0, 0.0]])
    x = np.array([guess.alpha, guess.lam])
    psi, zz, prob = inner(x[0], x[1], z0)
    history = []
    for _ in range(max_outer):
        history.append(float(np.max(np.abs(psi))))
        if np.max(np.abs(psi)) * abs(t[j1]) <= 1e-2 * tol:
            break
        Jo = np.empty((2, 2))
        for c in range(2):
            h = 1e-7 * max(1.0, abs(x[c]))
            xp = x.copy()
            xp[c] += h
            Jo[:, c] = (inner(xp[0], xp[1], zz)[0] - psi) / h
        x = x - np.linalg.solve(Jo, psi)
        psi, zz, prob = inner(x[0], x[1], zz)
    zfull = np.concatenate([zz[:prob.nw], x])
    prob_final = _Problem(disc, base, modes, ("alpha", "lambda"), {"mu": base.mu})
    R = prob_final.residual(zfull, t)
    res = float(np.max(np.abs(R)))
    if res > BRANCH_TOL:
        raise DivergenceError(f"divided sheet solve stalled at residual {res:.3e}", res, history)
    return _state_from(prob_final, zfull, t, res, history)


def solve_sheet_point(disc: Discretization, base: TrivialParameters, modes, r: float, v: float, *,
                      gradients=None, tol: float = NEWTON_TOL) -> DiscreteWaveState:
    """Solution with amplitude coordinates (r cos v, r sin v), alpha and lambda free."""
    n1, n2 = modes
    c, s = math.cos(v), math.sin(v)
    # exact zeros where cos or sin vanish up to rounding of the angle
    t1 = 0.0 if abs(c) < 1e-12 else r * c
    t2 = 0.0 if abs(s) < 1e-12 else r * s
    t = (t1, t2)
    if r == 0.0:
        return trivial_state(disc, base, modes, t)
    g = gradients if gradients is not None else sheet_gradients(make_trivial_flow(base), n1, n2)
    try:
        ar, lr = g.slopes(v)
    except np.linalg.LinAlgError:
        ar, lr = 0.0, 0.0
    guess = base.replace(alpha=base.alpha + r * ar, lam=base.lam + r * lr)
    if t1 == 0.0 or t2 == 0.0:
        return _divided_solve(disc, base, modes, t, guess, tol=tol)
    Ew = np.zeros(disc.n_x)
    Pw = np.zeros((disc.n_x, disc.n_s))
    for tj, n in zip(t, modes):
        e, p = discrete_w_star(disc, base, n)
        Ew += tj * e
        Pw += tj * p
    pred = DiscreteWaveState(Ew, Pw, guess, t, base, tuple(modes))
    return newton_correct(disc, pred, ("mu",), tol=tol)


def continue_sheet_2d(base: TrivialParameters, n1: int, n2: int, t_grid, disc: Discretization | None = None,
                      *, polar: bool = True, delta: float = 0.1, ray_steps: int = 1,
                      threads: int | None = None, tol: float = NEWTON_TOL) -> list:
    """One ray branch per grid point of the two-mode sheet through mode pair (n1, n2).

    ``t_grid`` holds (r, v) pairs when ``polar`` is set and (t1, t2) pairs otherwise.  Each branch
    holds the trivial point and ``ray_steps`` solutions along the ray, ending at the grid point.
    """
    base.validate()
    disc = _check_disc(disc, base)
    if not n1 < n2:
        raise DomainError("need n1 < n2")
    ks = kernel_set(base)
    if tuple(ks.modes) != (n1, n2):
        raise DomainError(f"need M(base) = {{{n1}, {n2}}}, found {list(ks.modes)}")
    if not transversality_ok(base):
        raise TransversalityError("transversality fails at the base point", 0.0, [])
    flow = make_trivial_flow(base)
    det = determinant_C(flow, n1, n2, ks)
    if det.vanishes:
        raise VerificationError("determinant C vanishes: the sheet is not parametrized by (alpha, lambda)")
    grads = sheet_gradients(flow, n1, n2)
    pts = []
    for a, b in t_grid:
        if polar:
            r, v = float(a), float(b)
        else:
            r, v = math.hypot(a, b), math.atan2(b, a)
        if r < 0:
            raise DomainError("r must be nonnegative")
        if n2 % n1 == 0 and r > 0 and abs(math.sin(v)) <= delta:
            raise DomainError(f"|sin v| = {abs(math.sin(v)):.3g} <= delta = {delta} is excluded when n1 | n2")
        pts.append((r, v))

    def ray(rv):
        r, v = rv
        br = ContinuationBranch([_point(trivial_state(disc, base, (n1, n2)), (0.0, v))], base, (n1, n2),
                                disc, "sheet")
        for k in range(1, ray_steps + 1):
            rk = r * k / ray_steps
            if rk == 0.0:
                continue
            st = solve_sheet_point(disc, base, (n1, n2), rk, v, gradients=grads, tol=tol)
            br.points.append(_point(st, (rk, v)))
        return br

    workers = threads if threads is not None else sheet_threads()
    if workers <= 1 or len(pts) <= 1:
        return [ray(p) for p in pts]
    with ThreadPoolExecutor(max_workers=min(workers, len(pts))) as ex:
        return list(ex.map(ray, pts))


def fit_sheet_slopes(branch: ContinuationBranch) -> tuple[float, float]:
    """Least-squares slopes d alpha/dr and d lambda/dr at r = 0 along a ray (linear + quadratic fit)."""
    r = branch.amplitudes()
    da = branch.alphas() - branch.base_point.alpha
    dl = branch.lambdas() - branch.base_point.lam
    V = np.vstack([r, r * r]).T
    ca = np.linalg.lstsq(V, da, rcond=None)[0]
    cl = np.linalg.lstsq(V, dl, rcond=None)[0]
    return float(ca[0]), float(cl[0])


def branch_deviation(branch: ContinuationBranch, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(t, ||w(t) - t w*||_Y) for the nontrivial points of a curve branch."""
    disc = branch.disc
    n = branch.mode[0] if n is None else n
    Ew, Pw = discrete_w_star(disc, branch.base_point, n)
    ts, devs = [], []
    for p in branch.points:
        t = p.amplitude[0]
        if t == 0.0:
            continue
        st = p.state
        ts.append(t)
        devs.append(disc.y_norm(st.eta_coeffs - t * Ew, st.phi_hat_values - t * Pw))
    return np.array(ts), np.array(devs)
