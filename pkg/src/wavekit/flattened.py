"""Pointwise residual of the flattened free-boundary system.

The unknowns enter through their jets.  Every function here is plain arithmetic, so it accepts
complex arrays (complex-step derivatives) and arbitrary broadcast shapes.

Jet keys: eta, eta_x, eta_xx (surface elevation) and f, f_s, f_ss, f_x, f_xs, f_xx (the
perturbation phi_hat of the flattened stream function psi_hat = psi0 + phi_hat).
"""
from __future__ import annotations

JET_KEYS = ("eta", "eta_x", "eta_xx", "f", "f_s", "f_ss", "f_x", "f_xs", "f_xx")


def interior_residual(s, psi0, psi0_s, psi0_ss, alpha, jets):
    """(d_x - g d_s)^2 psi_hat + psi_hat_ss / (1+eta)^2 - alpha psi_hat, g = s eta_x / (1+eta)."""
    eta, eta_x, eta_xx = jets["eta"], jets["eta_x"], jets["eta_xx"]
    h = 1.0 + eta
    g = s * eta_x / h
    g_s = eta_x / h
    g_x = s * (eta_xx * h - eta_x * eta_x) / (h * h)
    p = psi0 + jets["f"]
    p_s = psi0_s + jets["f_s"]
    p_ss = psi0_ss + jets["f_ss"]
    p_xs = jets["f_xs"]
    p_xx = jets["f_xx"]
    return (p_xx - 2.0 * g * p_xs + g * g * p_ss - g_x * p_s + g * g_s * p_s
            + p_ss / (h * h) - alpha * p)


def surface_residual(psi0_s1, Q, jets):
    """(1 + eta_x^2) psi_hat_s^2 / (2 (1+eta)^2) + eta - Q with jets taken at s = 1."""
    eta, eta_x = jets["eta"], jets["eta_x"]
    h = 1.0 + eta
    p_s = psi0_s1 + jets["f_s"]
    return (1.0 + eta_x * eta_x) * p_s * p_s / (2.0 * h * h) + eta - Q
