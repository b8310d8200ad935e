"""Explicit monotone schemes for the polar, logarithmic and generalized equations.

The polar equation is advanced in the conservative form

    u_t = [ c sqrt(1 + r^2 u_r^2) + u_r + d/dr arctan(r u_r) ] / r

which is algebraically the same right-hand side (the arctan derivative
carries both the curvature term and part of the drift).  Each piece gets a
one-sided difference that makes the node update non-decreasing in every
neighbour value:

* arctan flux: arctan(r_{i+1/2} p+) - arctan(r_{i-1/2} p-), increasing in p+,
  decreasing in p-;
* drift u_r / r: forward difference p+ (its coefficient 1/r is positive);
* forcing c sqrt(...): Godunov choice of the squared slope.

Under the CFL bound below the forward Euler update is then a monotone map,
which gives the discrete comparison principle by induction.  The logarithmic
equation is the same construction with r replaced by e^x weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import LOG, POLAR, Grid1D, InitialProfile, Params, ProfileState
from .pde import GenCoeffs, godunov_square, spiral_coeffs

log = logging.getLogger(__name__)

ORIGIN_OPTIONS = ("ghost_neumann", "log_asymptotic", "dirichlet", "reflect")
FAR_OPTIONS = ("linear_extrapolation", "frozen_initial_slope", "dirichlet")
TINY = 1e-300


class SolverError(RuntimeError):
    pass


class CFLViolation(SolverError):
    """Requested step exceeds the stability bound."""


class DivergenceError(SolverError):
    """Update produced non-finite values; ``last_state`` is the last good one."""

    def __init__(self, msg, last_state=None, trajectory=None):
        super().__init__(msg)
        self.last_state = last_state
        self.trajectory = trajectory


@dataclass(frozen=True)
class SchemeConfig:
    t_end: float = 0.01
    cfl_safety: float = 0.5
    boundary_origin: str = "ghost_neumann"
    boundary_far: str = "linear_extrapolation"
    record_every: int = 1
    # "adaptive": state-dependent bound; "uniform": gradient-independent bound,
    # identical for every state on the grid (needed when two runs must share dt).
    dt_policy: str = "adaptive"
    record_times: tuple = ()

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.boundary_origin not in ORIGIN_OPTIONS:
            raise ValueError(f"boundary_origin must be one of {ORIGIN_OPTIONS}")
        if self.boundary_far not in FAR_OPTIONS:
            raise ValueError(f"boundary_far must be one of {FAR_OPTIONS}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.dt_policy not in ("adaptive", "uniform"):
            raise ValueError("dt_policy must be 'adaptive' or 'uniform'")


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    dt_history: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self) -> ProfileState:
        return self.snapshots[-1]

    def values(self) -> np.ndarray:
        return np.array([s.values for s in self.snapshots])

    def at(self, t: float, tol: float = 1e-12) -> ProfileState:
        for s in self.snapshots:
            if abs(s.t - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")


# --- CFL -------------------------------------------------------------------

def _polar_coeff_bounds(state: ProfileState, params: Params, uniform: bool):
    grid = state.grid
    h = grid.h
    r = grid.nodes
    u = state.values
    c = abs(params.c)
    diff = np.empty_like(r)
    adv = np.empty_like(r)
    inner = slice(1, grid.n - 1)
    ri = r[inner]
    if uniform:
        diff[inner] = 1.0
        adv[inner] = c + 1.0 / ri
    else:
        q = (u[2:] - u[:-2]) / (2.0 * h)
        rp, rm = ri + 0.5 * h, ri - 0.5 * h
        diff[inner] = 0.5 * (rp / (1.0 + (rp * q) ** 2) + rm / (1.0 + (rm * q) ** 2)) / ri
        adv[inner] = (c * ri * ri * np.abs(q) / np.sqrt(1.0 + (ri * q) ** 2) + 1.0) / ri
    # end nodes: the origin update is 3 u_rr with a ghost; the far node mirrors its neighbour
    if grid.lo == 0.0:
        diff[0], adv[0] = 3.0, 0.0
    else:
        diff[0], adv[0] = diff[1], adv[1]
    diff[-1], adv[-1] = diff[-2], adv[-2]
    return diff, adv


def _log_coeff_bounds(state: ProfileState, coeffs: GenCoeffs, uniform: bool):
    h = state.grid.h
    x = state.grid.nodes
    u = state.values
    p = np.gradient(u, h)
    e2 = np.exp(-2.0 * x)
    if uniform and coeffs.sigma2_max is not None and coeffs.adv_bound is not None:
        return e2 * coeffs.sigma2_max, np.abs(coeffs.adv_bound(x))
    diff = e2 * coeffs.sigma2(p)
    if coeffs.db_dp is not None:
        adv = np.abs(coeffs.db_dp(x, p))
    else:
        adv = np.abs(_fd_db_dp(coeffs, x, p))
    return diff, adv


def _dt_from_bounds(h, diff, adv, safety):
    with np.errstate(divide="ignore"):
        d1 = h * h / (2.0 * np.maximum(diff, TINY))
        d2 = h / (adv + TINY)
    return safety * float(min(d1.min(), d2.min()))


def cfl_dt(state: ProfileState, params: Params, cfg: SchemeConfig = SchemeConfig(),
           coeffs: Optional[GenCoeffs] = None) -> float:
    """safety * min over nodes of [h^2 / (2 a_i), h / |b_i|].

    a_i is the diffusion weight and b_i the drift coefficient at node i.  The
    origin node of a polar grid carries the weight 3 of its update 3 u_rr.
    """
    if not state.is_finite():
        raise DivergenceError("non-finite state", last_state=None)
    uniform = cfg.dt_policy == "uniform"
    if state.grid.coord_kind == POLAR:
        diff, adv = _polar_coeff_bounds(state, params, uniform)
    else:
        coeffs = coeffs or spiral_coeffs(params)
        diff, adv = _log_coeff_bounds(state, coeffs, uniform)
    return _dt_from_bounds(state.grid.h, diff, adv, cfg.cfl_safety)


def _fd_db_dp(coeffs: GenCoeffs, x, p, eps=1e-6):
    ex = np.exp(-x)

    def g(pp):
        return ex * coeffs.b(ex * pp, pp)

    return (g(p + eps) - g(p - eps)) / (2 * eps)


# --- stepping ----------------------------------------------------------------

def _check_dt(state, dt, params, cfg, coeffs=None):
    if not dt > 0:
        raise CFLViolation(f"dt must be positive, got {dt}")
    bound = cfl_dt(state, params, cfg, coeffs)
    # landing exactly on a record time may overshoot the bound by rounding
    if dt > bound * (1.0 + 1e-12) + 1e-12 * max(1.0, state.t):
        raise CFLViolation(f"dt={dt:.3e} exceeds CFL bound {bound:.3e}")


def _far_ghost(u, h, cfg, far_slope):
    if cfg.boundary_far == "frozen_initial_slope" and far_slope is not None:
        return u[-1] + h * far_slope
    return 2.0 * u[-1] - u[-2]


def _apply_far(new, cfg, bc):
    if cfg.boundary_far == "linear_extrapolation":
        new[-1] = 2.0 * new[-2] - new[-3]
    elif cfg.boundary_far == "dirichlet":
        new[-1] = _bc_value(bc, "right")


def _bc_value(bc, side):
    if bc is None or side not in bc:
        raise SolverError(f"dirichlet boundary requires a '{side}' value")
    return float(bc[side])


def polar_rates(u: np.ndarray, grid: Grid1D, params: Params, far_ghost: float) -> np.ndarray:
    """Discrete u_t at nodes 1..n-1 (node n-1 uses the supplied ghost value)."""
    h = grid.h
    r = grid.nodes[1:]
    c = params.c
    um = u[:-1]
    uc = u[1:]
    up = np.append(u[2:], far_ghost)
    pm = (uc - um) / h
    pp = (up - uc) / h
    s = godunov_square(pm, pp, c)
    flux = (np.arctan((r + 0.5 * h) * pp) - np.arctan((r - 0.5 * h) * pm)) / h
    return (c * np.sqrt(1.0 + r * r * s) + pp + flux) / r


def origin_rate(u: np.ndarray, h: float, c: float) -> float:
    """u_t(0) = 3 u_rr(0) with the ghost u_{-1} = u_1 + c h enforcing u_r(0) = -c/2."""
    return 3.0 * (2.0 * (u[1] - u[0]) + c * h) / (h * h)


def step_polar(state: ProfileState, dt: float, params: Params, cfg: SchemeConfig,
               far_slope: Optional[float] = None, bc: Optional[dict] = None,
               check: bool = True) -> ProfileState:
    if state.grid.coord_kind != POLAR:
        raise ValueError("step_polar needs a polar grid")
    if check:
        _check_dt(state, dt, params, cfg)
    grid = state.grid
    u = state.values
    h = grid.h
    new = np.empty_like(u)
    rates = polar_rates(u, grid, params, _far_ghost(u, h, cfg, far_slope))
    new[1:] = u[1:] + dt * rates
    if grid.lo == 0.0:
        if cfg.boundary_origin not in ("ghost_neumann", "log_asymptotic"):
            raise SolverError("a grid containing r = 0 uses the ghost Neumann origin")
        new[0] = u[0] + dt * origin_rate(u, h, params.c)
    elif cfg.boundary_origin == "dirichlet":
        new[0] = _bc_value(bc, "left")
    else:
        raise SolverError("a polar grid with lo > 0 needs a dirichlet inner boundary")
    _apply_far(new, cfg, bc)
    if not np.all(np.isfinite(new)):
        raise DivergenceError("non-finite values after polar step", last_state=state)
    return ProfileState(grid, state.t + dt, new)


def general_rates(ue: np.ndarray, x: np.ndarray, h: float, coeffs: GenCoeffs) -> np.ndarray:
    """Discrete u_t at every node from a ghost-extended array ``ue`` (length n + 2)."""
    pm = (ue[1:-1] - ue[:-2]) / h
    pp = (ue[2:] - ue[1:-1]) / h
    with np.errstate(over="ignore"):
        e2 = np.exp(-2.0 * x)
    if coeffs.sigma2_primitive is not None:
        diffusion = e2 * (coeffs.sigma2_primitive(pp) - coeffs.sigma2_primitive(pm)) / h
    else:
        diffusion = e2 * coeffs.sigma2(0.5 * (pm + pp)) * (pp - pm) / h
    if coeffs.numerical_b is not None:
        drift = coeffs.numerical_b(x, pm, pp)
    else:
        # local Lax-Friedrichs: monotone once alpha dominates |dG/dp| on the stencil
        ex = np.exp(-x)
        pc = 0.5 * (pm + pp)
        slope = coeffs.db_dp if coeffs.db_dp is not None else (
            lambda xx, p: _fd_db_dp(coeffs, xx, p))
        alpha = np.maximum.reduce([np.abs(slope(x, pm)), np.abs(slope(x, pp)),
                                   np.abs(slope(x, pc))])
        drift = ex * coeffs.b(ex * pc, pc) + 0.5 * alpha * (pp - pm)
    return drift + diffusion


def step_general(state: ProfileState, dt: float, coeffs: GenCoeffs, cfg: SchemeConfig,
                 params: Optional[Params] = None, far_slope: Optional[float] = None,
                 bc: Optional[dict] = None, check: bool = True) -> ProfileState:
    """Forward Euler step of u_t = e^-x b(e^-x u_x, u_x) + e^-2x sigma^2(u_x) u_xx."""
    if state.grid.coord_kind != LOG:
        raise ValueError("step_general needs a logarithmic grid")
    params = params or Params(c=0.0)
    if check:
        _check_dt(state, dt, params, cfg, coeffs)
    grid = state.grid
    u = state.values
    h = grid.h
    x = grid.nodes
    if cfg.boundary_origin in ("log_asymptotic", "ghost_neumann"):
        # u_x = -(c/2) e^x at the left end
        left = u[1] + params.c * h * math.exp(x[0])
    else:
        left = u[1]
    ue = np.concatenate([[left], u, [_far_ghost(u, h, cfg, far_slope)]])
    new = u + dt * general_rates(ue, x, h, coeffs)
    if cfg.boundary_origin == "dirichlet":
        new[0] = _bc_value(bc, "left")
    _apply_far(new, cfg, bc)
    if not np.all(np.isfinite(new)):
        raise DivergenceError("non-finite values after log step", last_state=state)
    return ProfileState(grid, state.t + dt, new)


def step_log(state: ProfileState, dt: float, params: Params, cfg: SchemeConfig,
             far_slope: Optional[float] = None, bc: Optional[dict] = None,
             check: bool = True) -> ProfileState:
    """The logarithmic spiral equation is the generalized one with spiral coefficients."""
    return step_general(state, dt, spiral_coeffs(params), cfg, params=params,
                        far_slope=far_slope, bc=bc, check=check)


# --- driver ------------------------------------------------------------------

def initial_state(initial, grid: Grid1D) -> ProfileState:
    if isinstance(initial, ProfileState):
        return initial.copy()
    return initial.sample(grid)


def run(initial, grid: Grid1D, params: Params, cfg: SchemeConfig,
        coeffs: Optional[GenCoeffs] = None,
        boundary_data: Optional[Callable[[float], dict]] = None,
        monitor: Optional[Callable[[ProfileState], None]] = None,
        dt_fixed: Optional[float] = None) -> Trajectory:
    """Integrate from ``initial`` (an InitialProfile or a ProfileState) to cfg.t_end.

    Snapshots are taken every ``record_every`` steps, at each entry of
    ``record_times`` (steps are shortened to land on them) and at t_end.
    ``monitor`` is called on every recorded snapshot and may raise.
    """
    state = initial_state(initial, grid)
    if grid.coord_kind == LOG and coeffs is None:
        coeffs = spiral_coeffs(params)
    h = grid.h
    far_slope = (state.values[-1] - state.values[-2]) / h
    if isinstance(initial, InitialProfile) and cfg.boundary_far == "frozen_initial_slope":
        far_slope = float(initial.d1(np.array([grid.radii[-1]]))[0])
        if grid.coord_kind == LOG:
            far_slope *= grid.radii[-1]
    marks = sorted(t for t in cfg.record_times if 0 < t < cfg.t_end)
    traj = Trajectory([state.copy()], [])
    if monitor:
        monitor(state)
    steps = 0
    t_end = cfg.t_end
    while state.t < t_end * (1.0 - 1e-14):
        dt = dt_fixed if dt_fixed is not None else cfl_dt(state, params, cfg, coeffs)
        target = t_end
        while marks and marks[0] <= state.t * (1.0 + 1e-14):
            marks.pop(0)
        if marks:
            target = min(target, marks[0])
        hit = state.t + dt >= target * (1.0 - 1e-12)
        if hit:
            dt = target - state.t
        bc = boundary_data(state.t + dt) if boundary_data else None
        try:
            if grid.coord_kind == POLAR:
                new = step_polar(state, dt, params, cfg, far_slope, bc, check=dt_fixed is None)
            else:
                new = step_general(state, dt, coeffs, cfg, params, far_slope, bc,
                                   check=dt_fixed is None)
        except DivergenceError as exc:
            exc.trajectory = traj
            raise
        if hit:
            new.t = target
        state = new
        steps += 1
        traj.dt_history.append(dt)
        done = state.t >= t_end * (1.0 - 1e-14)
        if done or hit or steps % cfg.record_every == 0:
            traj.snapshots.append(state.copy())
            if monitor:
                monitor(state)
    log.debug("run finished: %d steps, %d snapshots", steps, len(traj.snapshots))
    return traj


def with_config(cfg: SchemeConfig, **changes) -> SchemeConfig:
    return replace(cfg, **changes)


def advance(state: ProfileState, t_target: float, params: Params, cfg: SchemeConfig,
            coeffs: Optional[GenCoeffs] = None, far_slope: Optional[float] = None,
            bc: Optional[dict] = None) -> ProfileState:
    """Step ``state`` forward to exactly ``t_target`` with CFL-limited steps."""
    if t_target < state.t - 1e-15:
        raise ValueError("cannot advance backwards in time")
    if state.grid.coord_kind == LOG and coeffs is None:
        coeffs = spiral_coeffs(params)
    while state.t < t_target * (1.0 - 1e-14):
        dt = cfl_dt(state, params, cfg, coeffs)
        hit = state.t + dt >= t_target * (1.0 - 1e-12)
        if hit:
            dt = t_target - state.t
        if state.grid.coord_kind == POLAR:
            state = step_polar(state, dt, params, cfg, far_slope, bc, check=False)
        else:
            state = step_general(state, dt, coeffs, cfg, params, far_slope, bc, check=False)
        if hit:
            state.t = t_target
    return state
