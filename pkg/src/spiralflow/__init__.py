"""Spirals moving by forced mean curvature, written as graphs theta = -u(t, r)."""

from .core import (DomainError, Grid1D, InitialProfile, Params, ProfileState, RangeError,
                   SpiralCurve, make_profile, spiral_points, to_log, to_polar)
from .pde import eval_F_log, eval_Fbar, eval_gen_rhs_log
from .solver import SchemeConfig, Trajectory, cfl_dt, run, step_log, step_polar

__all__ = [
    "DomainError", "Grid1D", "InitialProfile", "Params", "ProfileState", "RangeError",
    "SpiralCurve", "make_profile", "spiral_points", "to_log", "to_polar",
    "eval_F_log", "eval_Fbar", "eval_gen_rhs_log",
    "SchemeConfig", "Trajectory", "cfl_dt", "run", "step_log", "step_polar",
]
__version__ = "0.1.0"
