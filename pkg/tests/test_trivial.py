import math

import mpmath as mp
import numpy as np
import pytest

from wavekit.errors import DomainError
from wavekit.kernel import sigma_constant
from wavekit.trivial import ThetaValue, TrivialParameters, branch_kernels, make_trivial_flow


def test_branch_kernels_examples():
    sc, ch = branch_kernels(1.0, 1.0)
    assert sc == pytest.approx(math.sinh(1.0), rel=1e-15)
    assert ch == pytest.approx(math.cosh(1.0), rel=1e-15)
    for s in (0.0, 0.3, 1.0):
        assert branch_kernels(0.0, s) == (s, 1.0)
    sig = sigma_constant()
    sc, ch = branch_kernels(-sig**2, 1.0)
    assert sc == pytest.approx(math.sin(sig) / sig, abs=1e-15)
    assert ch == pytest.approx(math.cos(sig), abs=1e-15)
    assert sc == pytest.approx(ch, abs=1e-12)
    # frozen from brentq on x cos x - sin x
    assert sc == pytest.approx(-0.21723362821122166, abs=1e-14)


def _mp_kernels(theta_sq, s):
    mp.mp.dps = 40
    z = mp.mpf(theta_sq) * mp.mpf(s) ** 2
    # entire series in z = theta^2 s^2, no branch choice involved
    sinhc = mp.mpf(s) * mp.nsum(lambda k: z**k / mp.factorial(2 * k + 1), [0, mp.inf])
    cosh = mp.nsum(lambda k: z**k / mp.factorial(2 * k), [0, mp.inf])
    return float(sinhc), float(cosh)


def test_branch_kernels_against_high_precision(rng):
    # a vectorized dense check plus a high-precision spot check on both regimes and the seam
    n = 400
    theta_sq = np.concatenate([rng.uniform(-60, 60, n // 2), rng.normal(0, 1e-7, n // 2)])
    s = rng.uniform(0, 1, n)
    sc, ch = branch_kernels(theta_sq, s)
    for k in range(n):
        ref_s, ref_c = _mp_kernels(theta_sq[k], s[k])
        scale_s = max(abs(ref_s), s[k] * 1e-3, 1e-300)
        assert abs(sc[k] - ref_s) <= 1e-12 * max(scale_s, abs(s[k]))
        assert abs(ch[k] - ref_c) <= 1e-12 * max(abs(ref_c), 1.0)


def test_branch_kernels_continuous_across_zero():
    s = 0.8
    for eps in (1e-6, 1e-8, 1e-9, 1e-11):
        lo = np.array(branch_kernels(-eps, s))
        hi = np.array(branch_kernels(eps, s))
        assert np.max(np.abs(hi - lo)) <= 2 * eps


def test_theta_value_even_and_continuous():
    tv = ThetaValue.for_mode(2, -4.0, 1.0)
    assert tv.theta_sq == 0.0
    assert tv.sinhc_at(0.5) == 0.5 and tv.cosh_at(0.5) == 1.0


def test_special_case_flow(special_flow):
    s = np.linspace(0, 1, 11)
    np.testing.assert_allclose(special_flow.psi0(s), -np.sin(s - 1), atol=1e-15)
    assert special_flow.Q == pytest.approx(0.5, abs=1e-15)
    assert special_flow.m1 == pytest.approx(0.0, abs=1e-15)
    assert special_flow.psi0_s1 == pytest.approx(-1.0, abs=1e-15)


def test_constants_match_definitions(rng):
    for _ in range(20):
        p = TrivialParameters(rng.uniform(0.2, 3) * rng.choice([-1, 1]), -rng.uniform(0.1, 30),
                              rng.uniform(0.1, 3.0), rng.uniform(0.3, 3))
        f = make_trivial_flow(p)
        a = math.sqrt(-p.alpha)
        assert f.Q == pytest.approx(p.mu**2 * a**2 * math.sin(p.lam) ** 2 / 2, rel=1e-14)
        assert f.m0 == pytest.approx(p.mu * math.cos(p.lam - a), rel=1e-13, abs=1e-15)
        assert f.m1 == pytest.approx(p.mu * math.cos(p.lam), rel=1e-13, abs=1e-15)


def test_ode_residual(rng):
    s = np.linspace(0, 1, 401)
    for _ in range(50):
        p = TrivialParameters(rng.uniform(0.2, 3), -rng.uniform(0.1, 40), rng.uniform(0.1, 3.0), 1.0)
        f = make_trivial_flow(p)
        scale = abs(p.mu) * max(1.0, -p.alpha)
        assert np.max(np.abs(f.psi0_ss(s) - p.alpha * f.psi0(s))) <= 1e-12 * scale


@pytest.mark.parametrize("name", ["lambda", "alpha", "mu"])
def test_parameter_derivatives_vs_central_differences(rng, name):
    s = np.linspace(0, 1, 21)
    key = {"lambda": "lam"}.get(name, name)
    for _ in range(10):
        p = TrivialParameters(rng.uniform(0.3, 2), -rng.uniform(0.3, 10), rng.uniform(0.3, 2.8), 1.0)
        f = make_trivial_flow(p)
        h = 1e-6
        fp = make_trivial_flow(p.replace(**{key: getattr(p, key) + h}))
        fm = make_trivial_flow(p.replace(**{key: getattr(p, key) - h}))
        d_s, d_ss = f.param_derivative(name)
        np.testing.assert_allclose(d_s(s), (fp.psi0_s(s) - fm.psi0_s(s)) / (2 * h), atol=1e-6)
        np.testing.assert_allclose(d_ss(s), (fp.psi0_ss(s) - fm.psi0_ss(s)) / (2 * h), atol=1e-6)


@pytest.mark.parametrize("bad", [dict(mu=0.0), dict(alpha=0.0), dict(alpha=1.0), dict(lam=0.0),
                                 dict(lam=math.pi), dict(kappa=0.0), dict(kappa=-1.0)])
def test_domain_violations(bad):
    kw = dict(mu=1.0, alpha=-1.0, lam=1.0, kappa=1.0)
    kw.update(bad)
    with pytest.raises(DomainError):
        make_trivial_flow(TrivialParameters(**kw))


def test_branch_kernels_million_pairs(rng):
    # independent path: principal complex square root, evaluated away from the series seam
    n = 10**6
    theta_sq = rng.uniform(-200, 200, n)
    s = rng.uniform(0.01, 1, n)
    keep = np.abs(theta_sq) * s * s > 1e-4
    theta_sq, s = theta_sq[keep], s[keep]
    t = np.sqrt(theta_sq.astype(complex))
    ref_s = (np.sinh(t * s) / t).real
    ref_c = np.cosh(t * s).real
    sc, ch = branch_kernels(theta_sq, s)
    # oscillatory values cross zero, so compare against the amplitude envelope
    env_s = np.where(theta_sq > 0, np.abs(ref_s), 1.0 / np.sqrt(np.abs(theta_sq)))
    env_c = np.where(theta_sq > 0, np.abs(ref_c), 1.0)
    assert np.max(np.abs(sc - ref_s) / env_s) <= 1e-12
    assert np.max(np.abs(ch - ref_c) / env_c) <= 1e-12
