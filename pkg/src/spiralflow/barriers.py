"""Barrier constants, super-solution checks, compatibility and mollification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Grid1D, InitialProfile, Params, cutoff
from .pde import curvature, eval_Fbar, eval_Fbar_over_r


class UnboundedConstantError(ValueError):
    """The barrier constant sup |Fbar|/r is infinite for this initial datum."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BarrierSpec:
    kind: str
    Cbar: float
    B: Callable[[float], float] = field(default=lambda t: 0.0)
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant_rate", "inverse_r"):
            raise ValueError(f"unknown barrier kind {self.kind!r}")
        if not self.Cbar >= 0:
            raise ValueError("Cbar must be non-negative")

    def offset(self, t, r):
        """Distance between the barrier and the initial datum at (t, r)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant_rate":
            return self.Cbar * t + 0.0 * r
        with np.errstate(divide="ignore"):
            return self.Cbar * t / r + self.B(t)

    def upper(self, initial: InitialProfile):
        return lambda t, r: initial.eval(np.asarray(r, dtype=float)) + self.offset(t, r)

    def lower(self, initial: InitialProfile):
        return lambda t, r: initial.eval(np.asarray(r, dtype=float)) - self.offset(t, r)


@dataclass(frozen=True)
class Compatibility:
    compatible: bool
    C: Optional[float]
    ratios: np.ndarray = field(repr=False, default=None)


def _profile_curvature(initial: InitialProfile, r):
    return curvature(r, initial.d1(r), initial.d2(r))


def compatibility_check(initial: InitialProfile, params: Params, grid: Grid1D,
                        tol: float = 1e-8) -> Compatibility:
    """Smallest C with |c + kappa(r_i)| <= C r_i on the nodes of (0, r0].

    The datum is declared incompatible when c + kappa does not vanish at
    r = 0, or when the ratio keeps growing over the three finest nodes at
    least like r^(-1/2).
    """
    c = params.c
    r = grid.radii
    r = r[(r > 0) & (r <= params.r0 * (1 + 1e-12))]
    if r.size < 3:
        raise PreconditionError("grid must put at least three nodes in (0, r0]")
    excess = np.abs(c + _profile_curvature(initial, r))
    ratios = excess / r
    at_zero = abs(c + float(_profile_curvature(initial, np.array([0.0]))[0]))
    if at_zero > tol * max(1.0, abs(c)):
        return Compatibility(False, None, ratios)
    r1, r2, r3 = r[:3]
    q1, q2, q3 = ratios[:3]
    if q1 > q2 > q3 > 0 and q1 / q3 >= math.sqrt(r3 / r1):
        return Compatibility(False, None, ratios)
    return Compatibility(True, float(ratios.max()), ratios)


def _fbar_over_r_abs(initial: InitialProfile, params: Params, r):
    """|Fbar(r, u0_r, u0_rr)|/r with the regrouped form near the origin."""
    q = initial.d1(r)
    y = initial.d2(r)
    out = np.empty_like(r)
    small = r < 1e-3 * max(r.max(), 1.0)
    if np.any(small):
        out[small] = np.abs(eval_Fbar_over_r(r[small], q[small], y[small], params))
    big = ~small
    out[big] = np.abs(eval_Fbar(r[big], q[big], y[big], params) / r[big])
    return out


def barrier_constant(initial: InitialProfile, params: Params, grid: Grid1D,
                     refine: int = 4) -> BarrierSpec:
    """Cbar = sup_r |Fbar(r, u0_r, u0_rr)|/r for compatible data.

    The supremum is a maximum over a ``refine``-times finer copy of the grid
    plus the analytic limit 3 |u0_rr(0)| at the origin.
    """
    compat = compatibility_check(initial, params, grid)
    if not compat.compatible:
        raise UnboundedConstantError(
            f"{initial.name} violates the compatibility condition for c={params.c}; "
            "sup |Fbar|/r is infinite")
    fine = np.linspace(grid.radii[0], grid.radii[-1], refine * (grid.n - 1) + 1)
    fine = fine[fine > 0]
    vals = _fbar_over_r_abs(initial, params, fine)
    origin = 3.0 * abs(float(initial.d2(np.array([0.0]))[0]))
    cbar = float(max(vals.max(), origin))
    return BarrierSpec("constant_rate", cbar,
                       details={"grid_nodes": int(fine.size), "r_max": float(fine[-1]),
                                "compat_C": compat.C})


def d_constant(c: float) -> float:
    """sup_{r>0} (c/r - 1/(2 r^2))/r = 16 c^3/27 (attained at r = 3/(4c)), 0 if c <= 0."""
    c = abs(c)
    return 16.0 * c**3 / 27.0 if c > 0 else 0.0


def d_constant_numeric(c: float, r=None) -> float:
    c = abs(c)
    if r is None:
        r = np.geomspace(1e-4, 1e4, 200001)
    return float(max(np.max((c / r - 0.5 / r**2) / r), 0.0))


def measure_bounds(initial: InitialProfile, r) -> dict:
    r = np.asarray(r, dtype=float)
    ur = initial.d1(r)
    urr = initial.d2(r)
    kappa = curvature(r, ur, urr)
    c1 = np.abs(r * urr) / (1.0 + (r * ur) ** 2) ** 1.5
    return {"slope": float(np.max(np.abs(ur))), "curvature": float(np.max(np.abs(kappa))),
            "c1": float(np.max(c1))}


def barrier_no_compat(initial: InitialProfile, params: Params, grid: Optional[Grid1D] = None,
                      C0: Optional[float] = None) -> BarrierSpec:
    """Constant Cbar and B(t) = Cbar t (1 + Cbar t/2) for u0 +- (Cbar t/r + B(t)).

    Cbar is the maximum of the case constants of the super-solution
    construction, evaluated with |c| (the problem is symmetric under
    (u, c) -> (-u, -c)).
    """
    if grid is None:
        grid = Grid1D.polar(0.0, 10.0, 4001)
    r = grid.radii
    m = measure_bounds(initial, r)
    if C0 is None:
        C0 = max(m["slope"], m["curvature"])
    elif m["slope"] > C0 * (1 + 1e-9) or m["curvature"] > C0 * (1 + 1e-9):
        raise PreconditionError(
            f"declared C0={C0} violated: sup|u_r|={m['slope']:.4g}, "
            f"sup|kappa|={m['curvature']:.4g}")
    c = abs(params.c)
    c1 = m["c1"]
    d = d_constant(c)
    cases = {
        "moderate_ratio_a": c + 2 * C0 + 4 * c1,
        "moderate_ratio_b": 3 * max(1.0, c) * C0 + 8 * c1 * C0**2,
        "small_A_a": 3 * c + 2 * C0 + 4 * c1,
        "small_A_b": c * C0 + 16 * c1 * C0,
        "d": d,
    }
    cbar = float(max(cases.values()))

    def B(t):
        return cbar * t * (1.0 + 0.5 * cbar * t)

    return BarrierSpec("inverse_r", cbar, B,
                       details={"C0": C0, "c1": c1, "cases": cases, "grid_nodes": grid.n})


def B_derivative(spec: BarrierSpec, t):
    return spec.Cbar * (1.0 + spec.Cbar * t)


def verify_supersolution(candidate: Callable, grid: Grid1D, time_samples, params: Params,
                         kind: str = "super", dt_fd: float = 1e-6) -> float:
    """max over samples of (Fbar(r, D w, D^2 w) - r w_t)_+ (mirrored for ``kind='sub'``).

    Space derivatives are centred differences on the grid, the time
    derivative a centred difference with step ``dt_fd``.
    """
    r_all = grid.radii
    h = grid.h
    r = r_all[1:-1]
    r = r[r > 0]
    worst = 0.0
    for t in time_samples:
        t = float(t)
        w = candidate(t, r)
        wp = candidate(t, r + h)
        wm = candidate(t, r - h) if r[0] - h > 0 else None
        if wm is None:
            w, wp, r_use = w[1:], wp[1:], r[1:]
            wm = candidate(t, r_use - h)
        else:
            r_use = r
        q = (wp - wm) / (2 * h)
        Y = (wp - 2 * w + wm) / (h * h)
        lo_t = max(t - dt_fd, 0.0)
        wt = (candidate(t + dt_fd, r_use) - candidate(lo_t, r_use)) / (t + dt_fd - lo_t)
        residual = eval_Fbar(r_use, q, Y, params) - r_use * wt
        if kind == "sub":
            residual = -residual
        worst = max(worst, float(np.max(np.maximum(residual, 0.0))))
    return worst


# --- mollification -----------------------------------------------------------

def cutoff_constants(eps: float = 1.0, r=None) -> tuple[float, float]:
    """Sampled sup_r r |Psi_eps'(r)| and sup_r r^2 |Psi_eps''(r)|.

    Both are scale invariant; sampling them for the scaled cutoff on a fixed
    radius grid checks that invariance numerically.
    """
    if r is None:
        r = np.linspace(0.0, 2.0, 200001)
    r = np.asarray(r, dtype=float)
    _, d1, d2 = cutoff(r / eps)
    return float(np.max(r * np.abs(d1) / eps)), float(np.max(r * r * np.abs(d2) / eps**2))


def mollify_initial(initial: InitialProfile, eps: float, params: Params,
                    C0: Optional[float] = None) -> InitialProfile:
    """Blend u0 with the compatible line U0(r) = u0(0) - (c/2) r near the origin.

    u0_eps = Psi_eps U0 + (1 - Psi_eps) u0 with Psi_eps(r) = cutoff(r/eps), so
    u0_eps has slope -c/2 at 0 and coincides with u0 for r >= 2 eps.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    c = params.c
    u00 = initial.at_origin()

    def parts(r):
        r = np.asarray(r, dtype=float)
        psi, psi1, psi2 = cutoff(r / eps)
        gap = u00 - 0.5 * c * r - initial.eval(r)
        gap1 = -0.5 * c - initial.d1(r)
        return r, psi, psi1 / eps, psi2 / eps**2, gap, gap1

    def ev(r):
        r, psi, _, _, gap, _ = parts(r)
        return initial.eval(r) + psi * gap

    def d1(r):
        r, psi, psi1, _, gap, gap1 = parts(r)
        return initial.d1(r) + psi1 * gap + psi * gap1

    def d2(r):
        r, psi, psi1, psi2, gap, gap1 = parts(r)
        return initial.d2(r) + psi2 * gap + 2.0 * psi1 * gap1 - psi * initial.d2(r)

    if C0 is None:
        C0 = max(initial.lip_lower, initial.lip_upper, initial.curv_bound or 0.0)
    C0 = max(C0, 0.5 * abs(c))
    c1, c3 = cutoff_constants(eps)
    rr = np.linspace(0.0, 2.0, 20001)
    c2 = float(np.max(rr * np.abs(initial.d2(rr))))
    bound = 2 * C0 * c3 + 4 * C0 * c1 + C0 + c2
    slope = 2 * C0 * (c1 + 1)
    meta = {"eps": eps, "C0": C0, "c1": c1, "c2": c2, "c3": c3, "C0_bar": bound,
            "base": initial.name}
    return InitialProfile(f"mollified({initial.name},eps={eps:g})", ev, d1, d2,
                          slope, slope, bound, meta)


def lemma_c2_value() -> float:
    """sup_{r>0} (r - (r - pi/3)_+^2) = pi/3 + 1/4, attained at r = pi/3 + 1/2."""
    return math.pi / 3 + 0.25
