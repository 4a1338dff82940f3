"""A priori bound formulas for the nudged equation.

Every formula carries its absolute constant ``C`` (default 1).  Norms of the
forcing are measured with the conventions of ``spectral``.  Theta_* are
absorbing-ball radii of the free SQG flow, measured empirically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .dynamics import SqgParams
from .spectral import TorusGrid, lebesgue_norm, sobolev_norm


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def forcing_norms(sqg: SqgParams, sigma: float, p: float, grid: TorusGrid | None = None) -> dict:
    """F_Lp, F_{H^{-gamma/2}}, F_{H^{sigma-gamma/2}}: forcing norms divided by kappa."""
    grid = sqg.resolve_grid(grid)
    f = sqg.forcing
    k, g = sqg.kappa, sqg.gamma
    return {
        "F_Lp": f.sup_norm(lambda x: lebesgue_norm(x, p), grid) / k,
        "F_Hmg2": f.sup_norm(lambda x: sobolev_norm(x, -g / 2), grid) / k,
        "F_Hsg2": f.sup_norm(lambda x: sobolev_norm(x, sigma - g / 2), grid) / k,
    }


def g_l2_sq(kappa, mu, F_Hmg2, theta_hsigma, C=1.0):
    return C * (kappa / mu * F_Hmg2**2 + theta_hsigma**2)


def g_lp(kappa, mu, F_Lp, theta_hsigma):
    return kappa / mu * F_Lp + theta_hsigma


def g_lp_tilde(kappa, mu, p, m, F_Lp, G_L2, theta_lp, C=1.0):
    """(C ((kappa/mu)^p (F^p + (G_L2/p)^p) + Theta_Lp^p + 2^{m(p-2)} G_L2^p))^{1/p}."""
    val = C * ((kappa / mu) ** p * (F_Lp**p + (G_L2 / p) ** p) + theta_lp**p + 2.0 ** (m * (p - 2)) * G_L2**p)
    return val ** (1.0 / p)


def m_infinity(kappa, mu, gamma, p, F_Lp, rho0, U0, C=1.0):
    """C (mu/kappa)^{1/e} [((kappa/mu) F_Lp + rho0 + 1)(U0^{gamma/2} + U0^{gamma/2 - 1/p})]^{1/e},
    e = gamma - 2/p."""
    e = gamma - 2 * _inv(p)
    if U0 <= 0:
        return 0.0
    bracket = (kappa / mu * F_Lp + rho0 + 1.0) * (U0 ** (gamma / 2) + U0 ** (gamma / 2 - _inv(p)))
    return C * (mu / kappa) ** (1.0 / e) * bracket ** (1.0 / e)


def dg_bound(kappa, mu, gamma, p, F_Lp, rho0, U0, delta_inf, C=1.0):
    """C (max{1/(delta kappa), (mu/kappa)((kappa/mu)F_Lp + rho0 + 1)} (U0^{gamma/2} + U0^{gamma/2-1/p}))^{1/e}."""
    e = gamma - 2 * _inv(p)
    if U0 <= 0:
        return 0.0
    lead = max(1.0 / (delta_inf * kappa), mu / kappa * (kappa / mu * F_Lp + rho0 + 1.0))
    return C * (lead * (U0 ** (gamma / 2) + U0 ** (gamma / 2 - _inv(p)))) ** (1.0 / e)


def xi(sup_lr, kappa, gamma, r, alpha, C=1.0):
    return C * (sup_lr / kappa) ** (2 * alpha / (gamma - 1 - 2 * _inv(r)))


def g_hsigma_tilde_sq(kappa, mu, F_Hsg2, theta_hsigma, xi_val, G_L2_sq, C=1.0):
    return C * (kappa / mu * F_Hsg2**2 + theta_hsigma**2 + xi_val * G_L2_sq)


def g_sigma_inf_sq(kappa, gamma, sigma, p, F_Hsg2, theta_sigma, M_inf, G_L2_sq, C=1.0):
    return C * (F_Hsg2**2 + theta_sigma**2 + (M_inf / kappa) ** (2 * sigma / (gamma - 1 - 2 * _inv(p))) * G_L2_sq)


def g_hsigma_sq(kappa, gamma, sigma, p, F_Hsg2, theta_hsigma, G_Lp, G_L2_sq, C=1.0):
    return C * (F_Hsg2**2 + theta_hsigma**2 + (G_Lp / kappa) ** (2 * sigma / (gamma - 1 - 2 * _inv(p))) * G_L2_sq)


def radius(kappa: float, F_Hmg2: float, C: float = 1.0) -> float:
    """R = C (1 + kappa)(1 + F_{H^{-gamma/2}})^2."""
    return C * (1.0 + kappa) * (1.0 + F_Hmg2) ** 2


@dataclass
class BoundSet:
    F_Lp: float
    F_Hmg2: float
    F_Hsg2: float
    G_L2: float
    G_Lp: float
    R: float
    rho0: float
    U0_bound: float
    M_inf: float
    G_sigma_inf: float
    G_Hsigma: float

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate_bounds(sqg: SqgParams, mu: float, sigma: float, p: float, theta_hsigma: float,
                    U0: float | None = None, grid: TorusGrid | None = None, C: float = 1.0) -> BoundSet:
    """All bound constants with rho0 = 4R and delta_inf = 1/mu.

    U0 defaults to its upper bound 4 mu delta_inf G_L2^2 = 4 G_L2^2.
    """
    F = forcing_norms(sqg, sigma, p, grid)
    k, g = sqg.kappa, sqg.gamma
    gl2sq = g_l2_sq(k, mu, F["F_Hmg2"], theta_hsigma, C)
    glp = g_lp(k, mu, F["F_Lp"], theta_hsigma)
    R = radius(k, F["F_Hmg2"], C)
    rho0 = 4 * R
    u0b = 4.0 * gl2sq
    U0 = u0b if U0 is None else U0
    minf = m_infinity(k, mu, g, p, F["F_Lp"], rho0, U0, C)
    gsi = g_sigma_inf_sq(k, g, sigma, p, F["F_Hsg2"], theta_hsigma, minf, gl2sq, C)
    ghs = g_hsigma_sq(k, g, sigma, p, F["F_Hsg2"], theta_hsigma, glp, gl2sq, C)
    return BoundSet(F["F_Lp"], F["F_Hmg2"], F["F_Hsg2"], math.sqrt(gl2sq), glp, R, rho0, u0b,
                    minf, math.sqrt(gsi), math.sqrt(ghs))
