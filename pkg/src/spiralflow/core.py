"""Domain types, grids, the initial-profile registry and coordinate changes.

A spiral attached at the origin is the curve ``{r exp(-i u(t, r)) : r >= 0}``.
The angle function ``u`` is sampled either against the radius ``r`` (polar
grid) or against ``x = ln r`` (logarithmic grid).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

POLAR = "polar_r"
LOG = "log_x"

ArrayFn = Callable[[np.ndarray], np.ndarray]


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class RangeError(ValueError):
    """Requested interval not covered by the available data."""


@dataclass(frozen=True)
class Params:
    c: float = 1.0
    r0: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ValueError(f"c must be finite, got {self.c}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")


@dataclass(frozen=True)
class Grid1D:
    coord_kind: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.coord_kind not in (POLAR, LOG):
            raise ValueError(f"unknown coord_kind {self.coord_kind!r}")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.coord_kind == POLAR and self.lo < 0:
            raise ValueError("polar grids start at r >= 0")
        if self.n < 3:
            raise ValueError("need at least 3 nodes")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def radii(self) -> np.ndarray:
        """Node radii, whatever the coordinate kind."""
        return self.nodes if self.coord_kind == POLAR else np.exp(self.nodes)

    @classmethod
    def polar(cls, lo, hi, n) -> "Grid1D":
        return cls(POLAR, float(lo), float(hi), int(n))

    @classmethod
    def log(cls, lo, hi, n) -> "Grid1D":
        return cls(LOG, float(lo), float(hi), int(n))


@dataclass
class ProfileState:
    grid: Grid1D
    t: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"values has shape {self.values.shape}, grid has {self.grid.n} nodes")
        if self.t < 0:
            raise ValueError("time must be non-negative")

    def copy(self) -> "ProfileState":
        return ProfileState(self.grid, self.t, self.values.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass(frozen=True)
class InitialProfile:
    """Analytic initial angle profile with its first two r-derivatives.

    ``lip_lower``/``lip_upper`` are the declared bounds ``-L0 <= u_r <= L1``;
    ``curv_bound`` bounds the curvature of the spiral when known.
    """

    name: str
    eval: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    lip_lower: float
    lip_upper: float
    curv_bound: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, r):
        return self.eval(np.asarray(r, dtype=float))

    def sample(self, grid: Grid1D, t: float = 0.0) -> ProfileState:
        return ProfileState(grid, t, self.eval(grid.radii))

    def at_origin(self) -> float:
        v = float(self.eval(np.array([0.0]))[0])
        if not math.isfinite(v):
            raise DomainError(f"profile {self.name!r} is not finite at r = 0")
        return v

    def check_bounds(self, r, tol: float = 1e-12) -> bool:
        d = self.d1(np.asarray(r, dtype=float))
        return bool(np.all(d >= -self.lip_lower - tol) and np.all(d <= self.lip_upper + tol))

    def shifted(self, delta: float) -> "InitialProfile":
        """Profile plus a constant, i.e. the spiral rotated by ``-delta``."""
        return InitialProfile(
            f"{self.name}+{delta:g}", lambda r: self.eval(r) + delta, self.d1, self.d2,
            self.lip_lower, self.lip_upper, self.curv_bound, dict(self.meta))

    def negated(self) -> "InitialProfile":
        return InitialProfile(
            f"-{self.name}", lambda r: -self.eval(r), lambda r: -self.d1(r),
            lambda r: -self.d2(r), self.lip_upper, self.lip_lower, self.curv_bound,
            dict(self.meta))


@dataclass
class SpiralCurve:
    points: np.ndarray
    t: float = 0.0

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])


# --- smooth transitions -----------------------------------------------------

def _bump_tail(s):
    """exp(-1/s) for s > 0, zero otherwise, with its first two derivatives."""
    s = np.asarray(s, dtype=float)
    # below 1/700 the tail underflows anyway; cutting there avoids 0/0 for subnormal s
    pos = s > 1.0 / 700.0
    sp = np.where(pos, s, 1.0)
    f = np.where(pos, np.exp(-1.0 / sp), 0.0)
    f1 = np.where(pos, f / sp**2, 0.0)
    f2 = np.where(pos, f * (1.0 - 2.0 * sp) / sp**4, 0.0)
    return f, f1, f2


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, non-decreasing.

    Returns the value and the first two derivatives.
    """
    t = np.asarray(t, dtype=float)
    g, g1, g2 = _bump_tail(t)
    k, k1, k2 = _bump_tail(1.0 - t)
    # d/dt of k(1 - t) flips the sign of odd derivatives
    k1 = -k1
    d = g + k
    s = g / d
    num = g1 * k - g * k1
    s1 = num / d**2
    num1 = g2 * k - g * k2
    s2 = (num1 * d - 2.0 * num * (g1 + k1)) / d**3
    return s, s1, s2


def cutoff(rho):
    """Non-increasing cutoff equal to 1 on [0, 1] and 0 on [2, inf)."""
    s, s1, s2 = smooth_step(np.asarray(rho, dtype=float) - 1.0)
    return 1.0 - s, -s1, -s2


# --- initial profile registry ----------------------------------------------

def zero() -> InitialProfile:
    z = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return InitialProfile("zero", z, z, z, 0.0, 0.0, 0.0)


def linear(a: float = 1.0) -> InitialProfile:
    a = float(a)
    # curvature of u = a r is a(2 + a^2 r^2)/(1 + a^2 r^2)^{3/2}, maximal at r = 0
    return InitialProfile(
        f"linear({a:g})",
        lambda r: a * np.asarray(r, dtype=float),
        lambda r: np.full_like(np.asarray(r, dtype=float), a),
        lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        max(-a, 0.0), max(a, 0.0), 2.0 * abs(a), {"a": a})


def logarithmic(a: float = 1.0) -> InitialProfile:
    """u(r) = a ln(1 + r): slope a at the origin, decaying like a/r."""
    a = float(a)
    return InitialProfile(
        f"logarithmic({a:g})",
        lambda r: a * np.log1p(r),
        lambda r: a / (1.0 + np.asarray(r, dtype=float)),
        lambda r: -a / (1.0 + np.asarray(r, dtype=float)) ** 2,
        max(-a, 0.0), max(a, 0.0), None, {"a": a})


def bump(amp: float = 0.5, center: float = 2.0, width: float = 1.0) -> InitialProfile:
    """Gaussian bump amp * exp(-((r - center)/width)^2)."""
    amp, center, width = float(amp), float(center), float(width)

    def g(r):
        z = (np.asarray(r, dtype=float) - center) / width
        return z, np.exp(-z * z)

    def ev(r):
        return amp * g(r)[1]

    def d1(r):
        z, e = g(r)
        return -2.0 * amp * z * e / width

    def d2(r):
        z, e = g(r)
        return amp * (4.0 * z * z - 2.0) * e / width**2

    slope = abs(amp) * math.sqrt(2.0) * math.exp(-0.5) / width
    return InitialProfile(f"bump({amp:g},{center:g},{width:g})", ev, d1, d2, slope, slope,
                          None, {"amp": amp, "center": center, "width": width})


def sine(amp: float = 0.3, k: float = 1.0, phase: float = 0.0) -> InitialProfile:
    """amp * sin(k r + phase), slopes in [-|amp k|, |amp k|]."""
    amp, k, phase = float(amp), float(k), float(phase)
    return InitialProfile(
        f"sine({amp:g},{k:g},{phase:g})",
        lambda r: amp * np.sin(k * np.asarray(r, dtype=float) + phase),
        lambda r: amp * k * np.cos(k * np.asarray(r, dtype=float) + phase),
        lambda r: -amp * k * k * np.sin(k * np.asarray(r, dtype=float) + phase),
        abs(amp * k), abs(amp * k), None, {"amp": amp, "k": k, "phase": phase})


def compatible_ramp(c: float = 1.0, width: float = 1.0) -> InitialProfile:
    """-(c/2) r cutoff(r/width): the line -(c/2) r near 0, zero beyond 2*width.

    Satisfies c + 2 u_r(0) = 0 with u_rr = 0 near the origin, so |c + kappa|/r
    stays bounded.
    """
    c, width = float(c), float(width)

    def ev(r):
        r = np.asarray(r, dtype=float)
        return -0.5 * c * r * cutoff(r / width)[0]

    def d1(r):
        r = np.asarray(r, dtype=float)
        psi, psi1, _ = cutoff(r / width)
        return -0.5 * c * (psi + r * psi1 / width)

    def d2(r):
        r = np.asarray(r, dtype=float)
        _, psi1, psi2 = cutoff(r / width)
        return -0.5 * c * (2.0 * psi1 / width + r * psi2 / width**2)

    rho = np.linspace(0.0, 2.0, 20001)
    psi, psi1, _ = cutoff(rho)
    g = -0.5 * c * (psi + rho * psi1)
    return InitialProfile(
        f"compatible_ramp({c:g},{width:g})", ev, d1, d2,
        max(-g.min(), 0.0), max(g.max(), 0.0), None, {"c": c, "width": width})


def from_samples(r, values, name: str = "sampled") -> InitialProfile:
    """Wrap sampled data; derivatives come from the monotone cubic interpolant."""
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    interp = PchipInterpolator(r, values, extrapolate=True)
    d1f = interp.derivative(1)
    d2f = interp.derivative(2)
    slopes = np.diff(values) / np.diff(r)
    return InitialProfile(
        name, lambda q: interp(np.asarray(q, dtype=float)),
        lambda q: d1f(np.asarray(q, dtype=float)),
        lambda q: d2f(np.asarray(q, dtype=float)),
        max(-slopes.min(), 0.0), max(slopes.max(), 0.0))


PROFILES: dict[str, Callable[..., InitialProfile]] = {
    "zero": zero,
    "linear": linear,
    "logarithmic": logarithmic,
    "bump": bump,
    "sine": sine,
    "compatible_ramp": compatible_ramp,
}


def make_profile(name: str, **kwargs) -> InitialProfile:
    try:
        factory = PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None
    return factory(**kwargs)


# --- coordinate changes ------------------------------------------------------

def _resample(src: ProfileState, targets: np.ndarray) -> np.ndarray:
    nodes = src.grid.nodes
    slack = 1e-12 * max(1.0, abs(nodes[0]), abs(nodes[-1]))
    if targets.min() < nodes[0] - slack or targets.max() > nodes[-1] + slack:
        raise RangeError(
            f"target range [{targets.min():.6g}, {targets.max():.6g}] outside source "
            f"[{nodes[0]:.6g}, {nodes[-1]:.6g}]")
    targets = np.clip(targets, nodes[0], nodes[-1])
    return PchipInterpolator(nodes, src.values)(targets)


def to_log(profile: ProfileState, x_lo: float, x_hi: float, n: int) -> ProfileState:
    """Resample u(r) onto a uniform grid in x = ln r, u(x) = u(e^x)."""
    if profile.grid.coord_kind != POLAR:
        raise ValueError("to_log expects a polar profile")
    grid = Grid1D.log(x_lo, x_hi, n)
    return ProfileState(grid, profile.t, _resample(profile, np.exp(grid.nodes)))


def to_polar(profile: ProfileState, r_lo: float, r_hi: float, n: int) -> ProfileState:
    """Resample u(x) onto a uniform radius grid; r_lo must be positive."""
    if profile.grid.coord_kind != LOG:
        raise ValueError("to_polar expects a logarithmic profile")
    if r_lo <= 0:
        raise RangeError("the origin has no logarithmic coordinate")
    grid = Grid1D.polar(r_lo, r_hi, n)
    return ProfileState(grid, profile.t, _resample(profile, np.log(grid.nodes)))


def spiral_points(profile: ProfileState) -> SpiralCurve:
    """Cartesian samples r_i exp(-i u(t, r_i)) of the spiral."""
    r = profile.grid.radii
    ang = -profile.values
    return SpiralCurve(np.column_stack([r * np.cos(ang), r * np.sin(ang)]), profile.t)
