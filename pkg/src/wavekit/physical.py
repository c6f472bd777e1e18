"""Physical fields on the fluid domain, stagnation points and closed-streamline detection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator, CubicSpline, RectBivariateSpline

from ._kernels import marching_squares
from .continuation import DiscreteWaveState, Discretization
from .errors import DomainError, VerificationError
from .trivial import make_trivial_flow

_PAD = 4


@dataclass
class PhysicalField:
    """psi sampled at G^{-1}(x_i, s_j) = (x_i, (1 + eta(x_i)) s_j) over one period.

    ``psi[i, j]`` belongs to x[i] and y[i, j]; ``s`` is the common flattened coordinate.
    """

    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    eta: np.ndarray
    kappa: float
    m0: float = float("nan")
    m1: float = float("nan")
    stagnation_points: list = field(default_factory=list)
    critical_layers: list = field(default_factory=list)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.kappa

    def rows(self):
        """(x, y, psi) rows, x-major."""
        X = np.repeat(self.x, self.s.size)
        return np.column_stack([X, self.y.ravel(), self.psi.ravel()])

    @classmethod
    def from_function(cls, psi_hat, eta, kappa: float, nx: int, ns: int, m0=float("nan"), m1=float("nan")):
        """Sample psi_hat(x, s) and eta(x) given as callables (used for synthetic fields)."""
        x = np.arange(nx) * (2.0 * math.pi / kappa) / nx
        s = np.linspace(0.0, 1.0, ns)
        e = np.asarray(eta(x), dtype=float)
        X, S = np.meshgrid(x, s, indexing="ij")
        return cls(x, s, (1.0 + e)[:, None] * S, np.asarray(psi_hat(X, S), dtype=float), e, kappa, m0, m1)


def phi_hat_evaluator(state: DiscreteWaveState, disc: Discretization):
    """phi_hat(x, s) from the Galerkin/Chebyshev coefficients."""
    interp = BarycentricInterpolator(disc.s, state.phi_hat_values.T)
    k = np.arange(disc.n_x) * disc.kappa

    def phi_hat(x, s):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        prof = interp(s)  # (ns, n_x)
        return np.cos(np.outer(x, k)) @ prof.T  # (nx, ns)

    return phi_hat


def reconstruct_field(state: DiscreteWaveState, disc: Discretization, resolution=(64, 33)) -> PhysicalField:
    """Total stream function psi0 + phi_hat composed with the inverse flattening."""
    nx, ns = int(resolution[0]), int(resolution[1])
    if nx < 4 or ns < 3:
        raise DomainError("resolution must be at least 4 x 3")
    flow = make_trivial_flow(state.params)
    x = np.arange(nx) * (2.0 * math.pi / disc.kappa) / nx
    s = np.linspace(0.0, 1.0, ns)
    eta = state.eta(x, disc.kappa)
    if np.min(1.0 + eta) <= 0:
        raise DomainError("min(1 + eta) <= 0")
    ph = phi_hat_evaluator(state, disc)
    vals = ph(x, s)
    # endpoints are collocation nodes, where phi_hat vanishes identically
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    psi = flow.psi0(s)[None, :] + vals
    # evenness: x -> period - x maps the grid to itself
    mirror = psi[(-np.arange(nx)) % nx]
    if np.max(np.abs(mirror - psi)) > 1e-12 * max(1.0, np.max(np.abs(psi))):
        raise VerificationError("reconstructed field is not even in x")
    y = (1.0 + eta)[:, None] * s[None, :]
    return PhysicalField(x, s, y, psi, eta, disc.kappa, flow.m0, flow.m1)


# ---------------------------------------------------------------------------------------------
# stagnation points


def _periodic_spline(xs, s, values, period, kx=3):
    xe = np.concatenate([xs[-_PAD:] - period, xs, xs[:_PAD] + period])
    ve = np.concatenate([values[-_PAD:], values, values[:_PAD]], axis=0)
    return RectBivariateSpline(xe, s, ve, kx=kx, ky=min(3, s.size - 1))


def _eta_spline(fld: PhysicalField):
    xe = np.append(fld.x, fld.period)
    ee = np.append(fld.eta, fld.eta[0])
    return CubicSpline(xe, ee, bc_type="periodic")


@dataclass(frozen=True)
class StagnationReport:
    points: list
    flattened: list
    kinds: list
    critical_layers: list

    def as_dict(self) -> dict:
        return {"points": [list(p) for p in self.points], "critical_layers": list(self.critical_layers)}


def detect_stagnation(fld: PhysicalField, tol: float = 1e-8, max_iter: int = 30) -> StagnationReport:
    """Zeros of grad psi polished by Newton on the bicubic interpolant, plus closed-streamline levels.

    Candidates are grid cells across which both flattened partial derivatives change sign (or are
    already below ``tol``).  Degenerate lines of stagnation give one point per grid column.
    """
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    sp = _periodic_spline(fld.x, fld.s, fld.psi, fld.period)
    es = _eta_spline(fld)
    X, S = np.meshgrid(fld.x, fld.s, indexing="ij")
    gx = sp.ev(X, S, dx=1)
    gs = sp.ev(X, S, dy=1)

    def phys_grad(x, s):
        h = 1.0 + es(x)
        px, ps = sp.ev(x, s, dx=1), sp.ev(x, s, dy=1)
        return np.array([px - s * es(x, 1) / h * ps, ps / h])

    def changes(a):
        return (np.sign(a[:-1, :-1]) != np.sign(a[1:, :-1])) | (np.sign(a[:-1, :-1]) != np.sign(a[:-1, 1:])) | \
               (np.sign(a[:-1, :-1]) != np.sign(a[1:, 1:])) | (np.abs(a[:-1, :-1]) <= tol)

    cand = np.argwhere(changes(gx) & changes(gs))
    found, kinds = [], []
    dx = fld.period / fld.x.size
    for i, j in cand:
        z = np.array([fld.x[i] + 0.5 * dx, 0.5 * (fld.s[j] + fld.s[j + 1])])
        ok = False
        for _ in range(max_iter):
            g = np.array([sp.ev(*z, dx=1), sp.ev(*z, dy=1)])
            H = np.array([[sp.ev(*z, dx=2), sp.ev(*z, dx=1, dy=1)],
                          [sp.ev(*z, dx=1, dy=1), sp.ev(*z, dy=2)]])
            step = np.linalg.lstsq(H, -g, rcond=1e-10)[0]
            z = z + step
            if not (0.0 <= z[1] <= 1.0) or not np.all(np.isfinite(z)):
                break
            if np.max(np.abs(step)) < 1e-13 * max(1.0, abs(z[0])):
                ok = True
                break
        if not ok or not (0.0 <= z[1] <= 1.0):
            continue
        # stay within the candidate column neighbourhood (no wandering along degenerate lines)
        z[0] = z[0] % fld.period
        if np.max(np.abs(phys_grad(z[0], z[1]))) > tol:
            continue
        if any(abs(z[0] - q[0]) < 0.5 * dx and abs(z[1] - q[1]) < 1e-6 for q in found):
            continue
        H = np.array([[sp.ev(*z, dx=2), sp.ev(*z, dx=1, dy=1)],
                      [sp.ev(*z, dx=1, dy=1), sp.ev(*z, dy=2)]])
        det = float(np.linalg.det(H))
        scale = float(np.max(np.abs(H))) ** 2
        kind = "degenerate" if abs(det) <= 1e-8 * max(scale, 1e-300) else ("center" if det > 0 else "saddle")
        found.append((float(z[0]), float(z[1])))
        kinds.append(kind)
    points = [(xq, float((1.0 + es(xq)) * sq)) for xq, sq in found]
    layers = _critical_layers(fld, found, kinds, sp)
    fld.stagnation_points = points
    fld.critical_layers = layers
    return StagnationReport(points, found, kinds, layers)


# ---------------------------------------------------------------------------------------------
# closed streamlines


def chain_segments(segments: np.ndarray, digits: int = 9):
    """Join marching-squares segments into polylines; returns [(points, closed)]."""
    def key(p):
        return (round(float(p[0]), digits), round(float(p[1]), digits))

    # a vertex lying exactly on the level yields zero-length pieces
    segments = [sg for sg in segments if key(sg[0]) != key(sg[1])]
    adj = {}
    for idx, (a, b) in enumerate(segments):
        adj.setdefault(key(a), []).append((idx, 1))
        adj.setdefault(key(b), []).append((idx, 0))
    used = np.zeros(len(segments), dtype=bool)
    lines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        pts = [segments[start][0], segments[start][1]]
        # walk forward from the end, then backward from the start
        for direction in (1, 0):
            while True:
                tip = key(pts[-1] if direction else pts[0])
                nxt = None
                for idx, other in adj.get(tip, []):
                    if not used[idx]:
                        nxt = (idx, other)
                        break
                if nxt is None:
                    break
                used[nxt[0]] = True
                p = segments[nxt[0]][nxt[1]]
                if direction:
                    pts.append(p)
                else:
                    pts.insert(0, p)
        arr = np.array(pts)
        closed = len(arr) > 3 and key(arr[0]) == key(arr[-1])
        lines.append((arr, closed))
    return lines


def _inside(poly: np.ndarray, p) -> bool:
    x, y = p
    inside = False
    n = len(poly)
    for k in range(n - 1):
        (x1, y1), (x2, y2) = poly[k], poly[k + 1]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def _critical_layers(fld: PhysicalField, found, kinds, sp, fractions=(0.05, 0.2, 0.5)):
    if not any(k == "center" for k in kinds):
        return []
    # sample on a grid extended by one period on each side so loops crossing x = 0 close
    nx = fld.x.size
    dx = fld.period / nx
    xe = np.concatenate([fld.x - fld.period, fld.x, fld.x + fld.period])
    psi_e = np.concatenate([fld.psi, fld.psi, fld.psi], axis=0)
    levels = []
    saddles = [sp.ev(*q) for q, k in zip(found, kinds) if k == "saddle"]
    for (xc, sc), kind in zip(found, kinds):
        if kind != "center":
            continue
        pc = float(sp.ev(xc, sc))
        # nearest separatrix level bounds the loop family; otherwise the field extremes
        is_max = sp.ev(xc, sc, dx=2) < 0
        # the walls s = 0 and s = 1 are streamlines too
        walls = [float(v) for v in np.concatenate([fld.psi[:, 0], fld.psi[:, -1]])]
        others = [v for v in saddles + walls if (v < pc if is_max else v > pc)]
        if others:
            bound = max(others) if is_max else min(others)
        else:
            bound = float(np.min(fld.psi) if is_max else np.max(fld.psi))
        ci = (xc - xe[0]) / dx
        cj = np.interp(sc, fld.s, np.arange(fld.s.size))
        for frac in fractions:
            level = pc + frac * (bound - pc)
            segs = marching_squares(psi_e, level)
            for poly, closed in chain_segments(segs):
                if closed and _inside(poly, (ci, cj)):
                    levels.append(float(level))
                    break
    return sorted(set(levels))


# ---------------------------------------------------------------------------------------------
# surface shape


def minimal_harmonic(eta_coeffs, rel_tol: float = 1e-9) -> int:
    """gcd of the harmonics present in eta; the minimal period is 2 pi / (gcd * kappa)."""
    e = np.asarray(eta_coeffs, dtype=float)
    scale = np.max(np.abs(e[1:])) if e.size > 1 else 0.0
    if scale == 0:
        return 0
    ks = [k for k in range(1, e.size) if abs(e[k]) > rel_tol * scale]
    g = 0
    for k in ks:
        g = math.gcd(g, k)
    return g


def crests_per_minimal_period(eta_coeffs, kappa: float, samples: int = 4096) -> int:
    """Local maxima of eta over one minimal period (periodic sampling)."""
    g = minimal_harmonic(eta_coeffs)
    if g == 0:
        return 0
    period = 2.0 * math.pi / (g * kappa)
    x = np.arange(samples) * period / samples
    k = np.arange(len(eta_coeffs)) * kappa
    e = np.cos(np.outer(x, k)) @ np.asarray(eta_coeffs, dtype=float)
    return int(np.sum((e > np.roll(e, 1)) & (e >= np.roll(e, -1))))
