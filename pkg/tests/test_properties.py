"""Property-based checks of the pointwise identities and scheme invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from spiralflow.core import Grid1D, Params, ProfileState
from spiralflow.pde import chain_rule_identity_residual, curvature, eval_F_log, eval_Fbar
from spiralflow.solver import SchemeConfig, cfl_dt, step_polar
from spiralflow.verify import psi_map, rel_residual

radius = st.floats(0.1, 10.0)
slope = st.floats(-10.0, 10.0)
speed = st.floats(-3.0, 3.0)


@given(radius, slope, slope, speed)
def test_chain_rule(r, q, y, c):
    p = Params(c=c)
    scale = max(1.0, abs(eval_Fbar(r, q, y, p) / r))
    assert chain_rule_identity_residual(r, q, y, p) / scale <= 1e-12


@given(radius, slope, slope, speed)
def test_geometric_law(r, q, y, c):
    vn = eval_Fbar(r, q, y, Params(c=c)) / np.sqrt(1 + (r * q) ** 2)
    assert rel_residual(vn, c + curvature(r, q, y)) <= 1e-12


@given(radius, slope, slope, speed)
def test_sign_symmetry(r, q, y, c):
    a = eval_Fbar(r, -q, -y, Params(c=-c))
    b = -eval_Fbar(r, q, y, Params(c=c))
    assert rel_residual(a, b) <= 1e-14


@given(st.floats(-5, 5), slope, slope, speed)
def test_log_form_sign_symmetry(x, p, X, c):
    assert rel_residual(eval_F_log(x, -p, -X, Params(c=-c)),
                        -eval_F_log(x, p, X, Params(c=c))) <= 1e-14


@given(st.floats(-5, 5), st.floats(-10, 10))
def test_psi_periodic(x, th):
    a = psi_map(x, th)
    b = psi_map(x, th + 2 * np.pi)
    assert np.max(np.abs(a - b)) <= 1e-13 * max(1.0, np.linalg.norm(a))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.05, 0.05), min_size=41, max_size=41),
       st.lists(st.floats(0.0, 0.2), min_size=41, max_size=41), speed)
def test_one_step_monotone(incs, gaps, c):
    g = Grid1D.polar(0.0, 4.0, 41)
    v = np.cumsum(incs)
    w = v + np.asarray(gaps)
    cfg = SchemeConfig(dt_policy="uniform", boundary_far="frozen_initial_slope")
    p = Params(c=c)
    dt = cfl_dt(ProfileState(g, 0.0, v), p, cfg)
    sv = step_polar(ProfileState(g, 0.0, v), dt, p, cfg, far_slope=0.1)
    sw = step_polar(ProfileState(g, 0.0, w), dt, p, cfg, far_slope=0.1)
    assert np.all(sv.values <= sw.values + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=31, max_size=31), speed)
def test_one_step_sign_symmetry(incs, c):
    g = Grid1D.polar(0.0, 3.0, 31)
    u = np.cumsum(incs)
    cfg = SchemeConfig()
    dt = cfl_dt(ProfileState(g, 0.0, u), Params(c=c), cfg)
    a = step_polar(ProfileState(g, 0.0, u), dt, Params(c=c), cfg, check=False)
    b = step_polar(ProfileState(g, 0.0, -u), dt, Params(c=-c), cfg, check=False)
    np.testing.assert_allclose(a.values, -b.values, atol=1e-12, rtol=0)
