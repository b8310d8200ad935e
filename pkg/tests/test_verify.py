import json
import math

import numpy as np
import pytest

from spiralflow.barriers import mollify_initial
from spiralflow.core import Grid1D, Params, from_samples, make_profile
from spiralflow.pde import radial_heat_coeffs, spiral_coeffs
from spiralflow.solver import run
from spiralflow.verify import (SetupError, check_bs_assumptions, comparison_config,
                               comparison_experiment, geometric_law_residual,
                               gradient_experiment, psi_jacobian, psi_lower_bound_survey,
                               psi_map, random_ordered_pair, time_regularity_experiment)

P0, P1 = Params(c=0.0), Params(c=1.0)
G = Grid1D.polar(0.0, 10.0, 401)


def test_constant_shift_pair():
    v0 = make_profile("sine", amp=0.3)
    w0 = v0.shifted(1.0)
    rep = comparison_experiment(v0, w0, P1, comparison_config(0.02), G)
    assert rep.passed and rep.measured["max_crossing"] == 0.0
    cfg = comparison_config(0.02)
    gap = run(w0, G, P1, cfg).final.values - run(v0, G, P1, cfg).final.values
    np.testing.assert_allclose(gap, 1.0, atol=1e-12, rtol=0)


def test_min_with_rotated_copy_is_ordered():
    base = make_profile("sine", amp=0.4, k=1.5)
    r = np.linspace(0, 10, 2001)
    lower = from_samples(r, np.minimum(base(r), base.shifted(-0.3)(r) + 0.1 * np.sin(r)))
    upper = from_samples(r, base(r))
    rep = comparison_experiment(lower, upper, P1, comparison_config(0.02), G)
    assert rep.passed


def test_unordered_pair_is_a_setup_error():
    with pytest.raises(SetupError, match="precondition"):
        comparison_experiment(make_profile("linear", a=1.0), make_profile("zero"), P1)


def test_random_pairs_are_ordered():
    rng = np.random.default_rng(5)
    r = np.linspace(0, 10, 4001)
    for _ in range(50):
        v, w = random_ordered_pair(rng)
        assert np.all(v(r) <= w(r))
        assert w.d1(np.array([10.0]))[0] == v.d1(np.array([10.0]))[0]


@pytest.mark.parametrize("c,amp,lo,hi", [(0.0, 0.3, -1.0, 0.3), (1.0, 0.3, -1.0, 0.3)])
def test_gradient_bounds_small_slopes(c, amp, lo, hi):
    rep = gradient_experiment(make_profile("sine", amp=amp, k=1.0), Params(c=c), grid=G)
    h = G.h
    assert rep.passed
    assert rep.measured["lower_bound"] == pytest.approx(lo - 10 * h)
    assert rep.measured["upper_bound"] == pytest.approx(hi + 10 * h, abs=1e-6)


def test_gradient_bounds_large_slopes():
    rep = gradient_experiment(make_profile("sine", amp=1.0, k=2.0), P1, grid=G)
    assert rep.passed
    assert rep.measured["lower_bound"] == pytest.approx(-2 - 10 * G.h, abs=1e-6)


def test_gradient_zero_data():
    rep = gradient_experiment(make_profile("zero"), P1, grid=G)
    assert rep.passed
    assert rep.measured["upper_bound"] == pytest.approx(10 * G.h)
    assert rep.measured["max_gradient"] <= 1e-12


def test_gradient_mirrored_branch():
    rep = gradient_experiment(make_profile("sine", amp=0.3), Params(c=-1.0), grid=G)
    assert rep.passed and rep.parameters["mirrored"]


def test_time_regularity_static():
    rep = time_regularity_experiment(make_profile("zero"), P0, grid=G)
    assert rep.passed and rep.parameters["compatible"]
    assert rep.measured["max_rate"] == 0.0


def test_time_regularity_sqrt_layer():
    rep = time_regularity_experiment(make_profile("zero"), P1, grid=Grid1D.polar(0, 10, 801))
    assert not rep.parameters["compatible"]
    assert 0.4 <= rep.measured["exponent"] <= 0.6
    assert rep.passed


def test_time_regularity_mollified():
    m = mollify_initial(make_profile("zero"), 0.1, P1)
    rep = time_regularity_experiment(m, P1, grid=Grid1D.polar(0, 10, 801))
    assert rep.parameters["compatible"] and rep.passed
    assert rep.measured["max_rate"] <= rep.measured["Cbar"]


def test_bs_spiral_constants():
    for c in (1.0, -0.5, 0.0):
        d = check_bs_assumptions(spiral_coeffs(Params(c=c)))
        assert d["delta1"] == pytest.approx(abs(c), abs=1e-9)
        assert d["delta4"] == pytest.approx(abs(c), abs=1e-9)
        assert d["delta2"] == pytest.approx(1.0, abs=1e-9)
        assert d["delta3"] == pytest.approx(1.0, abs=1e-9)
        assert d["sigma_inf"] == 1.0 and d["passes"]


def test_bs_without_far_probe_underestimates_delta1():
    d = check_bs_assumptions(spiral_coeffs(P1), asymptotic=False)
    assert 0.99 < d["delta1"] < 1.0


def test_bs_radial_heat():
    assert not check_bs_assumptions(radial_heat_coeffs(2))["passes"]
    assert check_bs_assumptions(radial_heat_coeffs(3))["passes"]
    with pytest.raises(ValueError):
        check_bs_assumptions(spiral_coeffs(P1), box=math.inf)


def test_psi_branches():
    np.testing.assert_array_equal(psi_map(-1.0, 0.0), [-1.0, 1.0, 0.0])
    np.testing.assert_allclose(psi_map(2.0, math.pi / 2), [0.0, 0.0, math.e**2], atol=1e-15)
    x = np.linspace(-4, 1, 1001)
    th = np.linspace(0, 2 * np.pi, 1001)
    b = psi_map(x, th)[:, 1:]
    assert np.all(np.linalg.norm(b, axis=-1) <= math.e + 1e-15)
    mid = psi_map(0.5, 0.3)
    assert 0 < mid[0] < 0.5


def test_psi_jacobian_matches_differences():
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 3, 200)
    th = rng.uniform(-3, 3, 200)
    J = psi_jacobian(x, th)
    h = 1e-6
    dx = (psi_map(x + h, th) - psi_map(x - h, th)) / (2 * h)
    dth = (psi_map(x, th + h) - psi_map(x, th - h)) / (2 * h)
    np.testing.assert_allclose(J[..., 0], dx, atol=1e-7)
    np.testing.assert_allclose(J[..., 1], dth, atol=1e-7)


def test_psi_pure_log_region_ratio():
    rng = np.random.default_rng(1)
    x = rng.uniform(-3, -0.5, 1000)
    th = rng.uniform(-3, 3, 1000)
    y = x + rng.uniform(-0.2, 0.2, 1000)
    sg = th + rng.uniform(-1.5, 1.5, 1000)
    ratio = np.linalg.norm(psi_map(x, th) - psi_map(y, sg), axis=-1) / np.hypot(x - y, th - sg)
    assert np.all(ratio <= 1 + 1e-12) and np.all(ratio >= 2 / math.pi)


def test_psi_survey():
    s = psi_lower_bound_survey(20_000)
    assert s["passes"] and s["m_psi_empirical"] > 1e-3
    assert all(v["pairs"] == 20_000 for v in s["per_delta0"].values())
    with pytest.raises(ValueError):
        psi_lower_bound_survey(100)


def test_reports_deterministic_and_serializable():
    a = psi_lower_bound_survey(10_000, seed=3)
    b = psi_lower_bound_survey(10_000, seed=3)
    assert a == b
    rep = gradient_experiment(make_profile("sine", amp=0.3), P1, grid=G)
    d = rep.to_dict()
    d.pop("runtime")
    d2 = gradient_experiment(make_profile("sine", amp=0.3), P1, grid=G).to_dict()
    d2.pop("runtime")
    assert json.dumps(d, sort_keys=True) == json.dumps(d2, sort_keys=True)


def test_geometric_law_residual_converges():
    rep = geometric_law_residual(make_profile("compatible_ramp", c=1.0), P1)
    assert rep.passed
    res = rep.measured["residuals"]
    assert res[0] > res[1] > res[2]
