import math

import numpy as np
import pytest

from spiralflow.barriers import (B_derivative, BarrierSpec, PreconditionError,
                                 UnboundedConstantError, barrier_constant, barrier_no_compat,
                                 compatibility_check, cutoff_constants, d_constant,
                                 d_constant_numeric, lemma_c2_value, mollify_initial,
                                 verify_supersolution)
from spiralflow.core import Grid1D, Params, make_profile

P0, P1 = Params(c=0.0), Params(c=1.0)
G = Grid1D.polar(0.0, 10.0, 2001)


def test_compatibility_examples():
    assert not compatibility_check(make_profile("zero"), P1, G).compatible
    res = compatibility_check(make_profile("linear", a=-0.5), P1, G)
    assert res.compatible and res.C < 1.0
    res = compatibility_check(make_profile("zero"), P0, G)
    assert res.compatible and res.C == 0.0


def test_compatibility_needs_nodes_near_origin():
    with pytest.raises(PreconditionError):
        compatibility_check(make_profile("zero"), Params(c=0.0, r0=1e-4), G)


def test_barrier_constant_examples():
    assert barrier_constant(make_profile("zero"), P0, G).Cbar == 0.0
    ramp = make_profile("compatible_ramp", c=1.0)
    spec = barrier_constant(ramp, P1, G)
    from spiralflow.pde import eval_Fbar

    r = np.linspace(1e-3, 10, 400001)
    direct = np.max(np.abs(eval_Fbar(r, ramp.d1(r), ramp.d2(r), P1) / r))
    assert spec.Cbar == pytest.approx(direct, rel=1e-3)
    with pytest.raises(UnboundedConstantError):
        barrier_constant(make_profile("zero"), P1, G)


def test_barrier_no_compat_zero_data():
    spec = barrier_no_compat(make_profile("zero"), P1)
    cases = spec.details["cases"]
    assert spec.details["C0"] == 0.0 and spec.details["c1"] == 0.0
    assert cases["small_A_a"] == 3.0 and cases["moderate_ratio_a"] == 1.0
    assert spec.Cbar == 3.0
    assert cases["d"] == pytest.approx(d_constant_numeric(1.0), rel=1e-6)
    zero = barrier_no_compat(make_profile("zero"), P0)
    assert zero.Cbar == 0.0 and zero.B(0.3) == 0.0


def test_d_constant():
    assert d_constant(1.0) == pytest.approx(16 / 27)
    assert d_constant(-1.5) == d_constant(1.5)
    assert d_constant(0.0) == 0.0


def test_B_saturates_constraint():
    spec = barrier_no_compat(make_profile("sine", amp=0.3), P1)
    assert spec.B(0.0) == 0.0
    t = np.linspace(0, 0.1, 11)
    h = 1e-7
    fd = (spec.B(t + h) - spec.B(t - h)) / (2 * h)
    np.testing.assert_allclose(fd, B_derivative(spec, t), rtol=1e-6)
    np.testing.assert_allclose(B_derivative(spec, t), spec.Cbar * (1 + spec.Cbar * t))


def test_declared_C0_checked():
    with pytest.raises(PreconditionError):
        barrier_no_compat(make_profile("linear", a=2.0), P1, C0=1.0)


def test_supersolution_checks():
    ramp = make_profile("compatible_ramp", c=1.0)
    grid = Grid1D.polar(0.0, 5.0, 1001)
    spec = barrier_constant(ramp, P1, grid)
    ts = [0.0, 0.01, 0.05]
    tol = 10 * grid.h
    assert verify_supersolution(spec.upper(ramp), grid, ts, P1) <= tol
    assert verify_supersolution(spec.lower(ramp), grid, ts, P1, kind="sub") <= tol
    static = make_profile("zero")
    assert verify_supersolution(lambda t, r: static(r), grid, ts, P0) == 0.0
    assert verify_supersolution(lambda t, r: static(r), grid, ts, P0, kind="sub") == 0.0


def test_inverse_r_barriers_are_super_and_sub():
    zero = make_profile("zero")
    spec = barrier_no_compat(zero, P1)
    grid = Grid1D.polar(0.0, 5.0, 1001)
    ts = [0.001, 0.01, 0.05]
    assert verify_supersolution(spec.upper(zero), grid, ts, P1) == 0.0
    assert verify_supersolution(spec.lower(zero), grid, ts, P1, kind="sub") == 0.0


def test_barrier_spec_validation():
    with pytest.raises(ValueError):
        BarrierSpec("quadratic", 1.0)
    with pytest.raises(ValueError):
        BarrierSpec("constant_rate", -1.0)


def test_mollified_zero():
    m = mollify_initial(make_profile("zero"), 0.1, P1)
    assert m.at_origin() == 0.0
    assert float(m.d1(np.array([0.0]))[0]) == pytest.approx(-0.5, abs=1e-14)
    r = np.array([0.25, 1.0, 3.0])
    np.testing.assert_array_equal(m(r), 0.0)
    assert compatibility_check(m, P1, G).compatible


def test_mollification_converges_pointwise():
    base = make_profile("sine", amp=0.3)
    r = np.array([0.05, 0.3, 1.0])
    gaps = [np.abs(mollify_initial(base, e, P1)(r) - base(r)) for e in (0.2, 0.05, 0.01)]
    assert np.all(gaps[-1] == 0.0)
    assert np.all(gaps[0] >= gaps[1])


def test_mollifying_compatible_data_stays_compatible():
    ramp = make_profile("compatible_ramp", c=1.0)
    for eps in (0.2, 0.05):
        assert compatibility_check(mollify_initial(ramp, eps, P1), P1, G).compatible


def test_mollifier_constant_eps_independent():
    vals = [mollify_initial(make_profile("zero"), e, P1).meta["C0_bar"]
            for e in (0.2, 0.1, 0.05, 0.025)]
    assert (max(vals) - min(vals)) / min(vals) <= 1e-3
    with pytest.raises(ValueError):
        mollify_initial(make_profile("zero"), 0.0, P1)


def test_cutoff_constants_scale_invariant():
    a = cutoff_constants(1.0)
    b = cutoff_constants(0.25)
    np.testing.assert_allclose(a, b, rtol=1e-3)


def test_lemma_constant():
    r = np.linspace(0, 5, 500001)
    direct = np.max(r - np.maximum(r - math.pi / 3, 0) ** 2)
    assert lemma_c2_value() == pytest.approx(direct, abs=1e-9)
    assert lemma_c2_value() == pytest.approx(math.pi / 3 + 0.25, abs=1e-15)
