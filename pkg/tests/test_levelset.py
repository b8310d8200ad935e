import math

import numpy as np
import pytest

from spiralflow.core import Grid1D, Params, ProfileState, RangeError, make_profile
from spiralflow.levelset import (ExtractionError, LevelSetField, dense_spiral,
                                 extract_zero_level, hausdorff, init_circle, init_from_profile,
                                 levelset_dt, levelset_rhs, restrict_radius, run_circle,
                                 run_coupled, step_levelset, wrap)
from spiralflow.solver import CFLViolation

G1 = Grid1D.polar(0.0, 10.0, 1001)


def profile(fn):
    return ProfileState(G1, 0.0, fn(G1.radii))


def angles(points):
    return np.arctan2(points[:, 1], points[:, 0])


def test_wrap_range():
    a = np.linspace(-20, 20, 1001)
    w = wrap(a)
    assert np.all((w > -np.pi) & (w <= np.pi))
    np.testing.assert_allclose(np.cos(w), np.cos(a), atol=1e-12)
    assert wrap(np.pi) == np.pi


def test_zero_profile_gives_positive_ray():
    f = init_from_profile(profile(np.zeros_like), 0.5, 4.0, 101)
    X, Y = f.mesh()
    m = f.mask
    np.testing.assert_allclose(f.values[m], np.arctan2(Y, X)[m], atol=1e-15)
    pts = extract_zero_level(f).points
    assert np.all(pts[:, 0] > 0)
    np.testing.assert_allclose(pts[:, 1], 0.0, atol=1e-12)


def test_pi_profile_gives_negative_ray():
    f = init_from_profile(profile(lambda r: np.full_like(r, np.pi)), 0.5, 4.0, 101)
    pts = extract_zero_level(f).points
    assert np.all(pts[:, 0] < 0)
    np.testing.assert_allclose(pts[:, 1], 0.0, atol=1e-12)


def test_archimedean_contour():
    f = init_from_profile(profile(lambda r: r), 0.5, 4.0, 201)
    curve = extract_zero_level(f)
    r = curve.radii
    assert np.all(np.diff(r) >= 0)
    resid = wrap(angles(curve.points) + r)
    assert np.max(np.abs(resid)) <= 2 * f.h / 0.5


def test_annulus_outside_profile_range():
    with pytest.raises(RangeError):
        init_from_profile(profile(np.zeros_like), 0.5, 12.0, 51)
    short = ProfileState(Grid1D.polar(1.0, 5.0, 41), 0.0, np.zeros(41))
    with pytest.raises(RangeError):
        init_from_profile(short, 0.5, 4.0, 51)


def test_linear_field_static_when_c_zero():
    x = np.linspace(-1, 1, 41)
    X, Y = np.meshgrid(x, x)
    f = LevelSetField(x, x.copy(), 0.3 * X - 0.7 * Y, np.ones_like(X, dtype=bool),
                      angular=False)
    rhs = levelset_rhs(f, Params(c=0.0), 1e-6)
    np.testing.assert_allclose(rhs, 0.0, atol=1e-12)


def test_pure_angle_rate_is_c_over_r():
    f = init_from_profile(profile(np.zeros_like), 0.5, 4.0, 257)
    rhs = levelset_rhs(f, Params(c=1.0), 1e-6)
    r = f.radius()
    sel = f.mask & (r > 1.0) & (r < 3.5)
    X, Y = f.mesh()
    # stay off the branch cut and the negative axis where the stencil sees the jump
    sel &= np.abs(np.arctan2(Y, X)) < 2.5
    np.testing.assert_allclose(rhs[sel], 1.0 / r[sel], rtol=0.05)


def test_step_errors():
    f = init_from_profile(profile(np.zeros_like), 0.5, 4.0, 65)
    with pytest.raises(CFLViolation):
        step_levelset(f, 1.0, Params(c=1.0))
    with pytest.raises(ValueError):
        step_levelset(f, 1e-6, Params(c=1.0), eps_reg=0.0)


def test_extraction_error_on_empty_contour():
    x = np.linspace(-1, 1, 11)
    X, _ = np.meshgrid(x, x)
    f = LevelSetField(x, x.copy(), X * 0 + 1.0, np.ones_like(X, dtype=bool), angular=False)
    with pytest.raises(ExtractionError):
        extract_zero_level(f)


def test_rotation_equivariance():
    base = make_profile("sine", amp=0.3, k=1.0)
    delta = 0.7
    fa = init_from_profile(base.sample(G1), 0.5, 4.0, 201)
    a = extract_zero_level(fa).points
    b = extract_zero_level(init_from_profile(base.shifted(delta).sample(G1), 0.5, 4.0,
                                             201)).points
    rot = np.array([[math.cos(-delta), -math.sin(-delta)],
                    [math.sin(-delta), math.cos(-delta)]])
    # both contours are linear interpolants on the same grid: they agree to O(h)
    assert hausdorff(a @ rot.T, b) <= 2 * fa.h


def test_shrinking_circle_small_grid():
    track = run_circle(1.0, 2.5, 64, [0.1, 0.375])
    for t, R in track:
        assert abs(R / math.sqrt(1 - 2 * t) - 1) <= 0.02
    f = init_circle(1.0, 2.0, 33)
    assert not f.angular and f.mask[0].sum() == 0


def test_coupled_run_refines():
    prof = make_profile("sine", amp=0.5, k=1.0)
    dists = []
    for n2d in (64, 128):
        res = run_coupled(prof, Params(c=1.0), 0.5, 4.0, n2d, 0.01,
                          grid1d=Grid1D.polar(0.0, 10.0, 801))
        assert res.field.t == pytest.approx(0.01) and res.profile.t == pytest.approx(0.01)
        pts = restrict_radius(extract_zero_level(res.field).points, 0.6, 3.2)
        d = hausdorff(pts, dense_spiral(res.profile, 0.6, 3.2))
        assert d <= 3 * res.field.h
        dists.append(d)
    assert dists[1] < dists[0]


def test_levelset_dt():
    f = init_from_profile(profile(np.zeros_like), 0.5, 4.0, 65)
    h = f.h
    assert levelset_dt(f, Params(c=0.0)) == pytest.approx(0.5 * h * h / 4)
