"""Cartesian level-set evolution on an annulus, used to cross-check the graph solver.

The spiral is the zero set of U(t, X) = theta(X) + u(t, |X|), an angle-valued
field.  It is stored wrapped to (-pi, pi]; every finite difference is wrapped
back to (-pi, pi] as well, which makes the branch cut (where the stored value
jumps by 2 pi, along theta = pi - u) invisible to the stencils.

U evolves by  U_t = c |DU| + (DU^perp/|DU|) . D^2 U (DU^perp/|DU|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core import Params, ProfileState, RangeError, SpiralCurve
from .pde import godunov_square
from .solver import CFLViolation, DivergenceError

TWO_PI = 2.0 * math.pi


class ExtractionError(RuntimeError):
    pass


def wrap(a):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, TWO_PI)


@dataclass
class LevelSetField:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    t: float = 0.0
    a: float = 0.0
    b: float = math.inf
    angular: bool = True

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def shape(self):
        return self.values.shape

    def mesh(self):
        return np.meshgrid(self.x, self.y)

    def radius(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.hypot(X, Y)


def _box(extent: float, n2d: int):
    s = np.linspace(-extent, extent, n2d)
    return s, s.copy()


def profile_field(profile: ProfileState, X, Y) -> np.ndarray:
    """wrap(theta + u(|X|)) with u interpolated from a polar profile."""
    r = np.hypot(X, Y)
    nodes = profile.grid.radii
    interp = PchipInterpolator(nodes, profile.values)
    u = interp(np.clip(r, nodes[0], nodes[-1]))
    return wrap(np.arctan2(Y, X) + u)


def init_from_profile(profile: ProfileState, a: float, b: float, n2d: int,
                      eps_extent: float = 0.0) -> LevelSetField:
    """Level-set field U = theta + u(t, |X|) on the box [-b, b]^2, annulus a <= |X| <= b."""
    lo, hi = profile.grid.radii[0], profile.grid.radii[-1]
    if not (lo < a < b < hi):
        raise RangeError(f"annulus [{a}, {b}] must lie inside the profile range ({lo}, {hi})")
    x, y = _box(b + eps_extent, n2d)
    X, Y = np.meshgrid(x, y)
    r = np.hypot(X, Y)
    mask = (r >= a) & (r <= b)
    return LevelSetField(x, y, profile_field(profile, X, Y), mask, profile.t, a, b, True)


def init_circle(radius: float, extent: float, n2d: int) -> LevelSetField:
    """(|X|^2 - radius^2)/(2 radius) on the full box (no angle wrapping).

    The quadratic is smooth at the origin, unlike the signed distance whose
    cone tip has no gradient and seeds spurious zero crossings there.
    """
    x, y = _box(extent, n2d)
    X, Y = np.meshgrid(x, y)
    r = np.hypot(X, Y)
    mask = np.zeros_like(r, dtype=bool)
    mask[1:-1, 1:-1] = True
    values = (r * r - radius * radius) / (2.0 * radius)
    return LevelSetField(x, y, values, mask, 0.0, 0.0, math.inf, False)


def _diff(a, angular):
    return wrap(a) if angular else a


def levelset_rhs(field: LevelSetField, params: Params, eps_reg: float) -> np.ndarray:
    """Discrete right-hand side on interior nodes (edges of the array get zero)."""
    U = field.values
    h = field.h
    ang = field.angular
    out = np.zeros_like(U)
    c = params.c

    dxp = _diff(U[1:-1, 2:] - U[1:-1, 1:-1], ang) / h
    dxm = _diff(U[1:-1, 1:-1] - U[1:-1, :-2], ang) / h
    dyp = _diff(U[2:, 1:-1] - U[1:-1, 1:-1], ang) / h
    dym = _diff(U[1:-1, 1:-1] - U[:-2, 1:-1], ang) / h

    ux = 0.5 * (dxp + dxm)
    uy = 0.5 * (dyp + dym)
    uxx = (dxp - dxm) / h
    uyy = (dyp - dym) / h
    uxy = (_diff(U[2:, 2:] - U[2:, :-2], ang) - _diff(U[:-2, 2:] - U[:-2, :-2], ang)) / (4 * h * h)

    grad2 = ux * ux + uy * uy
    curv = (uxx * uy * uy - 2.0 * ux * uy * uxy + uyy * ux * ux) / (grad2 + eps_reg * eps_reg)
    if c != 0.0:
        s = godunov_square(dxm, dxp, c) + godunov_square(dym, dyp, c)
        drive = c * np.sqrt(s)
    else:
        drive = 0.0
    out[1:-1, 1:-1] = drive + curv
    return out


def levelset_dt(field: LevelSetField, params: Params, safety: float = 0.5) -> float:
    h = field.h
    bounds = [h * h / 4.0]
    if params.c != 0:
        bounds.append(h / (math.sqrt(2.0) * abs(params.c)))
    return safety * min(bounds)


def step_levelset(field: LevelSetField, dt: float, params: Params,
                  eps_reg: Optional[float] = None,
                  boundary: Optional[Callable[[float, LevelSetField], np.ndarray]] = None,
                  safety: float = 1.0) -> LevelSetField:
    """Forward Euler step; nodes off the mask are then reset from ``boundary``."""
    if eps_reg is None:
        eps_reg = 1e-6 / max(field.a, 1e-12) if field.angular else 1e-6
    if not eps_reg > 0:
        raise ValueError("eps_reg must be positive")
    bound = levelset_dt(field, params, safety)
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds 2D bound {bound:.3e}")
    rhs = levelset_rhs(field, params, eps_reg)
    new = field.values + dt * np.where(field.mask, rhs, 0.0)
    if field.angular:
        new = wrap(new)
    t_new = field.t + dt
    out = replace(field, values=new, t=t_new)
    if boundary is not None:
        ref = boundary(t_new, out)
        out.values = np.where(field.mask, out.values, ref)
    if not np.all(np.isfinite(out.values[field.mask])):
        raise DivergenceError("non-finite level-set values")
    return out


def extract_zero_level(field: LevelSetField, restrict_to_mask: bool = True) -> SpiralCurve:
    """Zero crossings along grid edges (the vertices of the marching-squares contour).

    For angle-valued fields an edge only counts when its wrapped jump is
    below pi, which discards the branch cut.  Points are ordered by radius.
    """
    U = field.values
    X, Y = field.mesh()
    m = field.mask if restrict_to_mask else np.ones_like(U, dtype=bool)
    pts = []
    for axis in (0, 1):
        if axis == 1:
            a, b_ = U[:, :-1], U[:, 1:]
            xa, xb, ya, yb = X[:, :-1], X[:, 1:], Y[:, :-1], Y[:, 1:]
            ok = m[:, :-1] & m[:, 1:]
        else:
            a, b_ = U[:-1, :], U[1:, :]
            xa, xb, ya, yb = X[:-1, :], X[1:, :], Y[:-1, :], Y[1:, :]
            ok = m[:-1, :] & m[1:, :]
        cross = ok & (np.sign(a) != np.sign(b_)) & ((a == 0) | (b_ == 0) | (a * b_ < 0))
        if field.angular:
            cross &= np.abs(b_ - a) < np.pi
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(cross, a / (a - b_), 0.0)
        px = xa + s * (xb - xa)
        py = ya + s * (yb - ya)
        pts.append(np.column_stack([px[cross], py[cross]]))
    pts = np.concatenate(pts)
    if pts.size == 0:
        raise ExtractionError("no zero crossing found")
    pts = np.unique(np.round(pts, 14), axis=0)
    order = np.argsort(np.hypot(pts[:, 0], pts[:, 1]), kind="stable")
    return SpiralCurve(pts[order], field.t)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def dense_spiral(profile: ProfileState, r_lo: float, r_hi: float, n: int = 20001) -> np.ndarray:
    """Finely resampled graph spiral on [r_lo, r_hi]."""
    nodes = profile.grid.radii
    r = np.linspace(r_lo, r_hi, n)
    u = PchipInterpolator(nodes, profile.values)(r)
    return np.column_stack([r * np.cos(-u), r * np.sin(-u)])


def restrict_radius(points: np.ndarray, r_lo: float, r_hi: float) -> np.ndarray:
    r = np.hypot(points[:, 0], points[:, 1])
    return points[(r >= r_lo) & (r <= r_hi)]


@dataclass
class CoupledResult:
    field: LevelSetField
    profile: ProfileState
    steps: int
    snapshots: list


def run_coupled(initial, params: Params, a: float, b: float, n2d: int, t_end: float,
                grid1d=None, cfg1d=None, eps_reg: Optional[float] = None,
                safety: float = 0.5, record_times=()) -> CoupledResult:
    """Evolve the level-set field and the 1D polar solution side by side.

    Nodes off the annulus are refreshed from the 1D solution after every 2D
    step (Dirichlet coupling); the 1D run sub-steps to each 2D time level.
    """
    from .core import Grid1D
    from .solver import SchemeConfig, advance

    grid1d = grid1d or Grid1D.polar(0.0, 10.0, 801)
    cfg1d = cfg1d or SchemeConfig(t_end=t_end)
    state = initial.sample(grid1d) if not isinstance(initial, ProfileState) else initial.copy()
    field = init_from_profile(state, a, b, n2d)
    X, Y = field.mesh()
    dt2 = levelset_dt(field, params, safety)
    marks = sorted(t for t in record_times if 0 < t < t_end)
    snaps = []
    steps = 0
    holder = {"state": state}

    def boundary(t_new, f):
        holder["state"] = advance(holder["state"], t_new, params, cfg1d)
        return profile_field(holder["state"], X, Y)

    while field.t < t_end * (1 - 1e-14):
        target = marks[0] if marks else t_end
        dt = min(dt2, target - field.t)
        field = step_levelset(field, dt, params, eps_reg, boundary, safety=1.0)
        steps += 1
        if marks and abs(field.t - marks[0]) <= 1e-12 * max(1.0, marks[0]):
            field.t = marks.pop(0)
            snaps.append((replace(field, values=field.values.copy()), holder["state"].copy()))
    return CoupledResult(field, holder["state"], steps, snaps)


def run_circle(radius: float, extent: float, n2d: int, times, eps_reg: float = 1e-6,
               safety: float = 0.5) -> list:
    """Shrinking circle under curvature flow with exact outer boundary data.

    Returns (t, mean extracted radius) at each requested time.
    """
    params = Params(c=0.0)
    field = init_circle(radius, extent, n2d)
    X, Y = field.mesh()
    r2 = X * X + Y * Y

    def exact(t, f):
        return (r2 + 2.0 * t - radius * radius) / (2.0 * radius)

    dt2 = levelset_dt(field, params, safety)
    out = []
    for target in sorted(times):
        while field.t < target * (1 - 1e-14):
            dt = min(dt2, target - field.t)
            field = step_levelset(field, dt, params, eps_reg, exact, safety=1.0)
        curve = extract_zero_level(field)
        out.append((float(target), float(np.mean(curve.radii))))
    return out
