import math

import numpy as np
import pytest

from oracles import (random_harmonic_field, random_two_mode_point, a0_closed, a2_closed, b0_closed, b2_closed, contour_derivative, lambda_ddot_closed,
                     residual_along, tan_roots, two_mode_near_zero)
from wavekit.asymptotics import (apply_L, appendix_derivatives, curve_jet, determinant_C, f_theta,
                                 kernel_field, pairing_dalpha, pairing_dlambda, pairing_dmu, pairing_quadrature,
                                 project_Z, second_order_data, sheet_gradients, solve_mode_bvp, t_isomorphism,
                                 w_star, z_basis)
from wavekit.errors import DomainError, SolvabilityError, TransversalityError
from wavekit.fields import HarmonicField, WavePair
from wavekit.kernel import kernel_set, mu_for_mode, sigma_constant
from wavekit.presets import load_preset
from wavekit.trivial import TrivialParameters, make_trivial_flow

X = np.linspace(0, 2 * math.pi, 37)
S = np.linspace(0, 1, 23)
XX, SS = np.meshgrid(X, S, indexing="ij")


def flow_of(name):
    return make_trivial_flow(load_preset(name).params)


# --- T and L -------------------------------------------------------------------------------------


def test_t_isomorphism_examples(special_flow):
    w = t_isomorphism(special_flow, kernel_field(special_flow, 1))
    np.testing.assert_allclose(w.eta_phi(X), np.cos(X), atol=1e-15)
    zero = t_isomorphism(special_flow, HarmonicField({}, 1.0))
    assert np.all(zero.eta_phi(X) == 0) and np.all(zero.phi_hat(XX, SS) == 0)
    f = special_flow
    pair = t_isomorphism(f, lambda x, s: s * f.psi0_s(s) / f.psi0_s1)
    np.testing.assert_allclose(pair.phi_hat(XX, SS), 0.0, atol=1e-15)
    np.testing.assert_allclose(pair.eta_phi(X), -1.0 / f.psi0_s1, atol=1e-15)


def test_t_isomorphism_callable_matches_field(ek3):
    f = make_trivial_flow(ek3.params)
    phi = kernel_field(f, 2)
    a, b = t_isomorphism(f, phi), t_isomorphism(f, lambda x, s: phi(x, s))
    np.testing.assert_allclose(a.phi_hat(XX, SS), b.phi_hat(XX, SS), atol=1e-14)
    np.testing.assert_allclose(a.eta_phi(X), b.eta_phi(X), atol=1e-14)


@pytest.mark.parametrize("name", ["ek1", "ek2", "ek3", "h325", "h1105"])
def test_apply_L_kernel_certification(name):
    pre = load_preset(name)
    f = make_trivial_flow(pre.params)
    x = np.linspace(0, 2 * math.pi / f.params.kappa, 41)
    Xg, Sg = np.meshgrid(x, S, indexing="ij")
    for n in pre.modes:
        surf, inter = apply_L(f, kernel_field(f, n))
        scale = max(1.0, abs(f.robin_coefficient), abs(f.psi0_s1))
        assert np.max(np.abs(surf(x))) <= 1e-11 * scale
        assert np.max(np.abs(inter(Xg, Sg))) <= 1e-11 * max(1.0, abs(f.params.alpha))


def test_apply_L_non_member(special_flow):
    surf, inter = apply_L(special_flow, kernel_field(special_flow, 0))
    assert np.max(np.abs(surf(X))) > 0.1
    for n in (0, 2, 5):
        assert np.max(np.abs(apply_L(special_flow, kernel_field(special_flow, n))[1](XX, SS))) <= 1e-12


@pytest.mark.parametrize("name", ["ek1", "ek2", "ek3"])
def test_project_Z_annihilates_range(name, rng):
    pre = load_preset(name)
    f = make_trivial_flow(pre.params)
    for _ in range(5):
        phi = random_harmonic_field(rng, f.params.kappa)
        coeffs = project_Z(f, pre.modes, apply_L(f, phi), n_x=64)
        assert max(abs(c) for c in coeffs.values()) <= 1e-10


def test_project_Z_identity_and_linearity(ek2):
    f = make_trivial_flow(ek2.params)
    assert project_Z(f, ek2.modes, z_basis(f, 1)) == pytest.approx({1: 1.0, 2: 0.0}, abs=1e-14)
    combo = 3 * z_basis(f, 1) + 5 * z_basis(f, 2)
    assert project_Z(f, ek2.modes, combo) == pytest.approx({1: 3.0, 2: 5.0}, abs=1e-13)
    with pytest.raises(DomainError):
        project_Z(f, [], combo)


# --- pairings --------------------------------------------------------------------------------------


def test_pairing_examples(special_flow):
    assert pairing_dlambda(special_flow, 1) == pytest.approx(-math.pi, abs=1e-14)
    assert pairing_dalpha(special_flow, 1) == pytest.approx(2 * math.pi / 3, abs=1e-14)
    assert f_theta(0.0, 1.0) == pytest.approx(-math.pi / 3, abs=1e-15)
    assert f_theta(0.0, 2.0) == pytest.approx(-math.pi / 6, abs=1e-15)
    for name in ("lambda", "alpha", "mu"):
        closed = {"lambda": pairing_dlambda, "alpha": pairing_dalpha, "mu": pairing_dmu}[name](special_flow, 1)
        assert pairing_quadrature(special_flow, 1, name) == pytest.approx(closed, abs=1e-12)


def test_pairing_requires_member(special_flow):
    with pytest.raises(DomainError):
        pairing_dlambda(special_flow, 2)


def test_pairing_vanishes_without_transversality():
    # alpha = -1, mu^2 = 2, lambda = 3pi/4: cot = -1 = -mu^2 |alpha|^{3/2} / 2
    p = TrivialParameters(math.sqrt(2.0), -1.0, 0.75 * math.pi, 1.0)
    f = make_trivial_flow(p)
    for n in kernel_set(p).modes:
        assert pairing_dlambda(f, n) == pytest.approx(0.0, abs=1e-14)


def test_pairing_off_centre():
    f = make_trivial_flow(TrivialParameters(1.0, -1.0, 0.75 * math.pi, 1.0))
    (n,) = kernel_set(f.params).modes
    assert pairing_dlambda(f, n) == pytest.approx(pairing_quadrature(f, n, "lambda"), abs=1e-10)
    assert pairing_dalpha(f, n) == pytest.approx(pairing_quadrature(f, n, "alpha"), abs=1e-10)


def test_f_theta_continuous():
    for eps in (1e-3, 1e-6, 1e-9):
        assert f_theta(eps, 1.0) == pytest.approx(f_theta(-eps, 1.0), abs=eps)
    # across the series switch at |theta^2| = 0.5
    assert f_theta(0.5 - 1e-12, 1.0) == pytest.approx(f_theta(0.5 + 1e-12, 1.0), abs=1e-11)


# --- determinant ---------------------------------------------------------------------------------------


def test_determinant_presets():
    d3 = determinant_C(flow_of("ek3"), 2, 3)
    assert d3.branch == "theta2=0" and not d3.vanishes
    # (pi A / 6 kappa)(sin sigma / sigma)^2 with A = -3 pi; frozen
    sig = sigma_constant()
    kappa = sig / math.sqrt(5)
    assert d3.value == pytest.approx(math.pi * (-3 * math.pi) / (6 * kappa) * (math.sin(sig) / sig) ** 2, rel=1e-12)
    assert d3.value == pytest.approx(-0.11588650583842, abs=1e-12)
    d2 = determinant_C(flow_of("ek2"), 1, 2)
    assert d2.branch == "theta2=0" and not d2.vanishes
    assert d2.value == pytest.approx(d2.simplified, abs=1e-10)


@pytest.mark.parametrize("eps", [1e-4, 1e-6, 1e-8])
def test_determinant_limit_through_zero(eps):
    p = two_mode_near_zero(eps)
    f = make_trivial_flow(p)
    d = determinant_C(f, 1, 2)
    assert d.branch == "general"
    assert abs(d.value - d.simplified) <= 1e-10 * max(1.0, d.scale)
    c0 = determinant_C(flow_of("ek2"), 1, 2).value
    assert abs(d.value - c0) <= 0.1 * eps


def test_determinant_vanishes_when_r_is_one():
    s1, s2 = tan_roots(2)
    for n1, n2 in ((1, 2), (1, 3), (2, 5)):
        kappa = math.sqrt((s2**2 - s1**2) / (n2 * n2 - n1 * n1))
        alpha = -s1**2 - (n2 * kappa) ** 2
        p = TrivialParameters(1 / math.sqrt(-alpha), alpha, 0.5 * math.pi, kappa)
        ks = kernel_set(p)
        assert (n1, n2) == ks.modes and ks.r == pytest.approx(1.0, abs=1e-13)
        d = determinant_C(make_trivial_flow(p), n1, n2, ks)
        assert d.vanishes and d.branch == "general"


def test_determinant_vanishes_when_r_is_zero():
    pre = load_preset("h325")
    f = make_trivial_flow(pre.params)
    d = determinant_C(f, 3, 5)
    assert d.vanishes


def test_determinant_random_pairs_including_mode_zero(rng):
    seen_zero = 0
    for _ in range(30):
        p, n1, n2, ks = random_two_mode_point(rng)
        d = determinant_C(make_trivial_flow(p), n1, n2, ks)
        assert abs(d.value - d.simplified) <= 1e-10 * max(1.0, d.scale)
        seen_zero += n1 == 0
    # the constant mode doubles both of its pairings, so it must be among the samples
    assert seen_zero >= 2


def test_determinant_rejects():
    f = flow_of("ek3")
    with pytest.raises(DomainError):
        determinant_C(f, 3, 2)
    with pytest.raises(DomainError):
        determinant_C(f, 1, 3)


# --- derivatives of F -------------------------------------------------------------------------------


def _random_pair(rng, kappa, kmax=4):
    field = random_harmonic_field(rng, kappa, kmax)
    return WavePair({k: float(rng.normal()) for k in range(kmax + 1)}, field)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_appendix_forms_match_contour_derivatives(order, rng):
    for name in ("ek1", "ek3"):
        f = flow_of(name)
        x = np.linspace(0, 2 * math.pi / f.params.kappa, 9)
        s = np.linspace(0, 1, 7)
        Xg, Sg = np.meshgrid(x, s, indexing="ij")
        w = _random_pair(rng, f.params.kappa)
        ref = contour_derivative(residual_along(f, w, Xg, Sg), order)
        surf, inter = appendix_derivatives(f, [w] * order, order)
        got = np.concatenate([np.ravel(surf(Xg[:, 0])), np.ravel(inter(Xg, Sg))])
        nx = x.size
        np.testing.assert_allclose(got[:nx], ref[:nx], rtol=1e-9, atol=1e-9 * np.max(np.abs(ref[:nx])))
        np.testing.assert_allclose(got[nx:], ref[nx:], rtol=1e-9, atol=1e-9 * np.max(np.abs(ref[nx:])))


def test_appendix_symmetric_multilinear(rng):
    f = flow_of("ek2")
    ws = [_random_pair(rng, f.params.kappa) for _ in range(3)]
    base = appendix_derivatives(f, ws, 3)
    ref_s, ref_i = base[0](X), base[1](XX, SS)
    scale = max(np.max(np.abs(ref_s)), np.max(np.abs(ref_i)))
    for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
        s_, i_ = appendix_derivatives(f, [ws[k] for k in perm], 3)
        assert np.max(np.abs(s_(X) - ref_s)) <= 1e-12 * scale
        assert np.max(np.abs(i_(XX, SS) - ref_i)) <= 1e-12 * scale
    s2, i2 = appendix_derivatives(f, ws[:2], 2)
    s2r, i2r = appendix_derivatives(f, ws[1::-1], 2)
    assert np.max(np.abs(s2(X) - s2r(X))) <= 1e-12 * np.max(np.abs(s2(X)))
    # bilinearity
    w0 = ws[0]
    sp, ip = appendix_derivatives(f, [w0, w0], 2)
    sm, im = appendix_derivatives(f, [w0, -w0], 2)
    np.testing.assert_allclose(sm(X), -sp(X), atol=1e-13)
    np.testing.assert_allclose(im(XX, SS), -ip(XX, SS), atol=1e-12)


def test_appendix_order_one_on_kernel():
    for name in ("ek1", "ek2", "ek3"):
        f = flow_of(name)
        for n in load_preset(name).modes:
            surf, inter = appendix_derivatives(f, [w_star(f, n)], 1)
            assert np.max(np.abs(surf(X))) <= 1e-12
            assert np.max(np.abs(inter(XX, SS))) <= 1e-11


def test_appendix_special_case_order_two(special_flow):
    w = w_star(special_flow, 1)
    surf, inter = appendix_derivatives(special_flow, [w, w], 2)
    np.testing.assert_allclose(surf(X), 2 + np.cos(2 * X), atol=1e-13)
    np.testing.assert_allclose(inter(XX, SS), b0_closed(SS) + b2_closed(SS) * np.cos(2 * XX), atol=1e-13)


def test_appendix_rejects(special_flow):
    w = w_star(special_flow, 1)
    with pytest.raises(DomainError):
        appendix_derivatives(special_flow, [w], 2)
    with pytest.raises(DomainError):
        appendix_derivatives(special_flow, [w] * 4, 4)


# --- second-order data -----------------------------------------------------------------------------


def test_second_order_data_special_case(special_flow):
    hc = second_order_data(special_flow, 1)
    assert hc.c0 == pytest.approx(2.0, abs=1e-13)
    assert hc.c2 == pytest.approx(1.0, abs=1e-13)
    assert hc.stray_harmonics <= 1e-13
    np.testing.assert_allclose(hc.b0(S), b0_closed(S), atol=1e-13)
    np.testing.assert_allclose(hc.b2(S), b2_closed(S), atol=1e-13)
    assert float(b2_closed(1.0)) == pytest.approx(1.0, abs=1e-15)


def test_solve_mode_bvp_special_case(special_flow):
    hc = second_order_data(special_flow, 1)
    s = np.linspace(0, 1, 201)
    a0 = solve_mode_bvp(-1.0, hc.b0, hc.c0, special_flow, 48)
    a2 = solve_mode_bvp(3.0, hc.b2, hc.c2, special_flow, 48)
    assert np.max(np.abs(a0.a(s) - a0_closed(s))) <= 1e-8
    assert np.max(np.abs(a2.a(s) - a2_closed(s))) <= 1e-8
    for sol in (a0, a2):
        assert abs(sol.boundary_residual) <= 1e-10 and sol.interior_residual <= 1e-8


def test_solve_mode_bvp_homogeneous(special_flow):
    sol = solve_mode_bvp(3.0, lambda s: 0 * s, 0.0, special_flow)
    assert np.max(np.abs(sol.values)) == 0.0


def test_solve_mode_bvp_resonance(special_flow):
    # theta^2 = 0 is the kernel mode itself: the homogeneous Robin problem has the solution s
    with pytest.raises(SolvabilityError):
        solve_mode_bvp(0.0, lambda s: s, 1.0, special_flow)
    with pytest.raises(DomainError):
        solve_mode_bvp(3.0, lambda s: s, 1.0, special_flow, n_points=4)


def test_curve_jet_special_case(special_flow):
    jet = curve_jet(special_flow, 1)
    assert jet.lambda_dot == 0.0
    assert abs(jet.lambda_dot_numerator) <= 1e-13
    closed = lambda_ddot_closed()
    assert closed == pytest.approx(-7.2768712056, abs=1e-9)
    assert jet.lambda_ddot == pytest.approx(closed, abs=1e-8)
    assert jet.lambda_ddot == pytest.approx(1.5 + 3 * float(jet.a0.a(1.0)) + 0.5 * float(jet.a2.a(1.0)), abs=1e-8)
    assert jet.lambda_ddot < 0
    assert jet.ratio_residual <= 1e-8
    assert jet.denominator == pytest.approx(-3 * math.pi, abs=1e-13)
    assert jet.numerator_terms["numerator"] == pytest.approx(-jet.lambda_ddot * jet.denominator, rel=1e-14)


def test_curve_jet_rejects(ek2):
    with pytest.raises(DomainError):
        curve_jet(make_trivial_flow(ek2.params), 1)
    # one-dimensional kernel without transversality
    p = TrivialParameters(math.sqrt(2.0), -1.0, 0.75 * math.pi, 1.0)
    ks = kernel_set(p)
    if ks.dimension == 1:
        with pytest.raises(TransversalityError):
            curve_jet(make_trivial_flow(p), ks.modes[0])
    # kernel {0}: a flat-surface mode
    p0 = TrivialParameters(mu_for_mode(0, -2.0, 1.5, 1.0), -2.0, 1.5, 1.0)
    assert kernel_set(p0).modes == (0,)
    with pytest.raises(DomainError):
        curve_jet(make_trivial_flow(p0), 0)


def test_sheet_gradients_special_pair(ek2):
    f = make_trivial_flow(ek2.params)
    g = sheet_gradients(f, 1, 2)
    kappa, sig = ek2.kappa, sigma_constant()
    assert g.divides
    for v in np.linspace(0.2, math.pi - 0.2, 7):
        p1, p2 = g.psi_r(v)
        assert p1 == pytest.approx((1 + kappa**2 / 3) * math.sin(v), abs=1e-8)
        assert p2 == pytest.approx((1 / 16 + 0.5 * math.cos(sig) ** 2) * math.cos(v) ** 2, abs=1e-8)
    a_r, l_r = g.slopes(1.2)
    assert abs(a_r) > 1e-3 and abs(l_r) > 1e-3


def test_sheet_gradients_case_i(ek3):
    g = sheet_gradients(make_trivial_flow(ek3.params), 2, 3)
    assert not g.divides
    assert max(abs(v) for v in g.P.values()) <= 1e-10
    assert g.psi_r(0.7) == (0.0, 0.0)
