"""Pointwise right-hand sides of the spiral equation in its various forms.

Polar form, with q = u_r and Y = u_rr::

    r u_t = Fbar(r, q, Y)
          = c sqrt(1 + r^2 q^2) + q (2 + r^2 q^2)/(1 + r^2 q^2) + r Y/(1 + r^2 q^2)

Logarithmic form, with x = ln r, p = u_x, X = u_xx::

    u_t = F(x, p, X) = c e^-x sqrt(1 + p^2) + e^-2x p + e^-2x X/(1 + p^2)

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DomainError, Params


def _positive_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    return r


def eval_Fbar(r, q, Y, params: Params):
    r = _positive_r(r)
    c = params.c
    p2 = (r * q) ** 2
    return c * np.sqrt(1.0 + p2) + q * (2.0 + p2) / (1.0 + p2) + r * Y / (1.0 + p2)


def eval_Fbar_over_r(r, q, Y, params: Params):
    """Fbar/r regrouped so the singular part (c + 2q)/r is isolated.

    sqrt(1+p^2) - 1 = p^2/(1 + sqrt(1+p^2)) and (2+p^2)/(1+p^2) = 2 - p^2/(1+p^2)
    give  Fbar/r = (c + 2q)/r + c r q^2/(1 + sqrt(1+p^2)) - r q^3/(1+p^2) + Y/(1+p^2).
    """
    r = _positive_r(r)
    c = params.c
    q = np.asarray(q, dtype=float)
    p2 = (r * q) ** 2
    return ((c + 2.0 * q) / r + c * r * q * q / (1.0 + np.sqrt(1.0 + p2))
            - r * q**3 / (1.0 + p2) + Y / (1.0 + p2))


def eval_F_log(x, p, X, params: Params):
    with np.errstate(over="ignore"):
        ex = np.exp(-np.asarray(x, dtype=float))
        p = np.asarray(p, dtype=float)
        return params.c * ex * np.sqrt(1.0 + p * p) + ex * ex * p + ex * ex * X / (1.0 + p * p)


def chain_rule_identity_residual(r, ur, urr, params: Params):
    """|F(ln r, r u_r, r u_r + r^2 u_rr) - Fbar(r, u_r, u_rr)/r|."""
    r = _positive_r(r)
    lhs = eval_F_log(np.log(r), r * ur, r * ur + r * r * urr, params)
    rhs = eval_Fbar(r, ur, urr, params) / r
    return np.abs(lhs - rhs)


def curvature(r, ur, urr):
    """Curvature of the spiral theta = -u(r); regular at r = 0 where it is 2 u_r."""
    r = np.asarray(r, dtype=float)
    p2 = (r * ur) ** 2
    den = (1.0 + p2) ** 1.5
    return ur * (2.0 + p2) / den + r * urr / den


def normal_velocity(r, ut, ur):
    r = _positive_r(r)
    return r * ut / np.sqrt(1.0 + (r * ur) ** 2)


@dataclass(frozen=True)
class GenCoeffs:
    """Coefficients of u_t = e^-x b(e^-x u_x, u_x) + e^-2x sigma(u_x)^2 u_xx.

    ``sigma2_primitive`` (an antiderivative of sigma^2) lets the solver use an
    exactly monotone flux form for the diffusion; ``numerical_b`` optionally
    supplies a monotone numerical Hamiltonian (x, p_minus, p_plus) -> value
    for the first-order part.
    """

    b: Callable
    sigma: Callable
    label: str = "custom"
    sigma2_primitive: Optional[Callable] = None
    numerical_b: Optional[Callable] = None
    db_dp: Optional[Callable] = None
    sigma2_max: Optional[float] = None
    adv_bound: Optional[Callable] = None

    def sigma2(self, p):
        s = self.sigma(p)
        return s * s


def eval_gen_rhs_log(x, p, X, coeffs: GenCoeffs):
    with np.errstate(over="ignore"):
        ex = np.exp(-np.asarray(x, dtype=float))
        return ex * coeffs.b(ex * p, p) + ex * ex * coeffs.sigma2(p) * X


def spiral_coeffs(params: Params) -> GenCoeffs:
    c = params.c

    def b(q, p):
        return c * np.sqrt(1.0 + p * p) + q

    def sigma(p):
        return 1.0 / np.sqrt(1.0 + p * p)

    def numerical_b(x, pm, pp):
        with np.errstate(over="ignore"):
            ex = np.exp(-x)
        return ex * c * np.sqrt(1.0 + godunov_square(pm, pp, c)) + ex * ex * pp

    def db_dp(x, p):
        ex = np.exp(-x)
        return ex * c * p / np.sqrt(1.0 + p * p) + ex * ex

    def adv_bound(x):
        ex = np.exp(-x)
        return abs(c) * ex + ex * ex

    return GenCoeffs(b, sigma, f"spiral(c={c:g})", np.arctan, numerical_b, db_dp,
                     1.0, adv_bound)


def radial_heat_coeffs(n: int) -> GenCoeffs:
    """Radial Laplacian in R^n: u_t = u_rr + (n-1)/r u_r.

    In the (b, sigma) splitting b = bbar - sigma^2 q with bbar = (n-1) q and
    sigma = 1, so b(q, p) = (n - 2) q.
    """
    k = float(n - 2)
    return GenCoeffs(
        lambda q, p: k * q,
        lambda p: np.ones_like(np.asarray(p, dtype=float)),
        f"radial_heat(n={n})",
        lambda p: np.asarray(p, dtype=float),
        None,
        lambda x, p: k * np.exp(-2.0 * x) + 0.0 * p,
        1.0,
        lambda x: abs(k) * np.exp(-2.0 * x),
    )


def godunov_square(pm, pp, c):
    """Upwind surrogate for q^2 in the c sqrt(1 + r^2 q^2) term.

    For c >= 0 the result is non-decreasing in pp and non-increasing in pm;
    for c < 0 the reverse, so c * sqrt(1 + s) is always monotone in the
    right direction.
    """
    if c >= 0:
        return np.maximum(np.maximum(pp, 0.0) ** 2, np.minimum(pm, 0.0) ** 2)
    return np.maximum(np.minimum(pp, 0.0) ** 2, np.maximum(pm, 0.0) ** 2)
