import math

import numpy as np
import pytest

from spiralflow.core import DomainError, Params
from spiralflow.pde import (GenCoeffs, chain_rule_identity_residual, curvature, eval_F_log,
                            eval_Fbar, eval_Fbar_over_r, eval_gen_rhs_log, godunov_square,
                            normal_velocity, radial_heat_coeffs, spiral_coeffs)

P1 = Params(c=1.0)


def test_fbar_oracles():
    assert eval_Fbar(1.0, 0.0, 0.0, P1) == 1.0
    assert eval_Fbar(1.0, 1.0, 0.0, P1) == pytest.approx(math.sqrt(2) + 1.5, abs=1e-15)
    with pytest.raises(DomainError):
        eval_Fbar(0.0, 0.0, 0.0, P1)


def test_grouped_form_at_small_r():
    r = np.geomspace(1e-12, 1e-3, 20)
    vals = eval_Fbar_over_r(r, -0.5, 0.0, P1)
    assert np.all(np.abs(vals) <= 1e-2)
    assert abs(vals[0]) <= 1e-11
    rr = np.geomspace(1e-2, 10, 50)
    np.testing.assert_allclose(eval_Fbar_over_r(rr, 0.3, -0.2, P1),
                               eval_Fbar(rr, 0.3, -0.2, P1) / rr, rtol=1e-12)


def test_flog_oracles():
    assert eval_F_log(0.0, 0.0, 0.0, P1) == 1.0
    assert eval_F_log(0.0, 1.0, 1.0, P1) == pytest.approx(math.sqrt(2) + 1.5, abs=1e-15)


def test_chain_rule_examples():
    assert chain_rule_identity_residual(1.0, 1.0, 0.0, P1) <= 1e-15
    assert chain_rule_identity_residual(math.e, 0.0, 0.0, P1) <= 1e-15
    rng = np.random.default_rng(1)
    r, q, y = rng.uniform(0.1, 10, (3, 1000))
    res = chain_rule_identity_residual(r, q, y, P1)
    scale = np.maximum(1.0, np.abs(eval_Fbar(r, q, y, P1) / r))
    assert np.max(res / scale) <= 1e-12


def test_curvature_examples():
    assert curvature(0.0, 0.7, 123.0) == pytest.approx(1.4)
    assert curvature(3.0, 0.0, 0.0) == 0.0
    a, r = 0.8, np.linspace(0.1, 5, 30)
    np.testing.assert_allclose(curvature(r, a, 0.0),
                               a * (2 + a * a * r * r) / (1 + a * a * r * r) ** 1.5, rtol=1e-14)
    np.testing.assert_allclose(curvature(r, -0.3, -1.1), -curvature(r, 0.3, 1.1))


def test_normal_velocity():
    assert normal_velocity(2.0, 0.0, 5.0) == 0.0
    assert normal_velocity(1.0, 0.7, 0.0) == pytest.approx(0.7)
    rng = np.random.default_rng(2)
    r = rng.uniform(0.1, 10, 500)
    q, y = rng.uniform(-10, 10, (2, 500))
    vn = normal_velocity(r, eval_Fbar(r, q, y, P1) / r, q)
    np.testing.assert_allclose(vn, 1.0 + curvature(r, q, y), rtol=1e-12, atol=1e-12)


def test_sign_symmetry():
    rng = np.random.default_rng(3)
    r = rng.uniform(0.1, 10, 500)
    q, y = rng.uniform(-10, 10, (2, 500))
    np.testing.assert_allclose(eval_Fbar(r, -q, -y, Params(c=-1.0)), -eval_Fbar(r, q, y, P1),
                               rtol=1e-14, atol=1e-14)


def test_generalized_rhs():
    x, p, X = np.meshgrid(np.linspace(-2, 2, 7), np.linspace(-3, 3, 7), np.linspace(-1, 1, 3))
    np.testing.assert_allclose(eval_gen_rhs_log(x, p, X, spiral_coeffs(P1)),
                               eval_F_log(x, p, X, P1), rtol=1e-14)
    # radial Laplacian u_rr + 2 u_r / r in x = ln r is e^-2x (u_xx + u_x)
    heat = radial_heat_coeffs(3)
    np.testing.assert_allclose(eval_gen_rhs_log(x, p, X, heat),
                               np.exp(-2 * x) * (p + X), rtol=1e-14)
    pure = GenCoeffs(lambda q, p: 0.0 * q, lambda p: np.ones_like(p))
    np.testing.assert_allclose(eval_gen_rhs_log(x, p, X, pure), np.exp(-2 * x) * X)


def test_godunov_square_monotonicity():
    s = np.linspace(-2, 2, 41)
    pm, pp = np.meshgrid(s, s, indexing="ij")
    for c in (1.0, -1.0):
        g = godunov_square(pm, pp, c)
        sign = 1 if c > 0 else -1
        assert np.all(sign * np.diff(g, axis=1) >= 0)
        assert np.all(sign * np.diff(g, axis=0) <= 0)
    assert godunov_square(-1.0, 1.0, 1.0) == 1.0
