"""Experiment drivers: comparison, gradient and time-regularity checks, the
(b, sigma) assumption checker, the psi interpolation map and cross-validations."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .barriers import (barrier_constant, barrier_no_compat, compatibility_check)
from .core import Grid1D, InitialProfile, Params, cutoff, smooth_step
from .pde import GenCoeffs, curvature, eval_F_log, eval_Fbar
from .solver import (SchemeConfig, cfl_dt, run, spiral_coeffs, step_general, step_polar)


class SetupError(ValueError):
    """An experiment precondition does not hold."""


@dataclass
class ExperimentReport:
    name: str
    parameters: dict
    measured: dict
    passed: bool
    runtime: float = 0.0
    notes: str = ""

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def rel_residual(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum.reduce([np.ones_like(a), np.abs(a), np.abs(b)])
    return np.abs(a - b) / scale


# --- pointwise identities ----------------------------------------------------

def _identity_samples(n, seed):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.1, 10.0, n)
    q = rng.uniform(-10.0, 10.0, n)
    Y = rng.uniform(-10.0, 10.0, n)
    c = rng.uniform(-2.0, 2.0, n)
    return r, q, Y, c


def chain_rule_experiment(n: int = 10_000, seed: int = 0) -> ExperimentReport:
    """F(ln r, r q, r q + r^2 Y) against Fbar(r, q, Y)/r on random samples."""
    t0 = time.perf_counter()
    r, q, Y, c = _identity_samples(n, seed)
    worst = 0.0
    for cv in np.unique(np.round(c, 1)):
        sel = np.round(c, 1) == cv
        p = Params(c=float(cv))
        rs, qs, Ys = r[sel], q[sel], Y[sel]
        lhs = eval_F_log(np.log(rs), rs * qs, rs * qs + rs * rs * Ys, p)
        worst = max(worst, float(rel_residual(lhs, eval_Fbar(rs, qs, Ys, p) / rs).max()))
    return ExperimentReport("chain_rule", {"n": n, "seed": seed},
                            {"max_rel_residual": worst}, worst <= 1e-12,
                            time.perf_counter() - t0)


def geometric_law_experiment(n: int = 10_000, seed: int = 0) -> ExperimentReport:
    """Fbar/sqrt(1 + r^2 q^2) is the normal velocity c + kappa."""
    t0 = time.perf_counter()
    r, q, Y, c = _identity_samples(n, seed)
    worst = 0.0
    for cv in np.unique(np.round(c, 1)):
        sel = np.round(c, 1) == cv
        p = Params(c=float(cv))
        rs, qs, Ys = r[sel], q[sel], Y[sel]
        vn = eval_Fbar(rs, qs, Ys, p) / np.sqrt(1.0 + (rs * qs) ** 2)
        worst = max(worst, float(rel_residual(vn, p.c + curvature(rs, qs, Ys)).max()))
    return ExperimentReport("geometric_law", {"n": n, "seed": seed},
                            {"max_rel_residual": worst}, worst <= 1e-12,
                            time.perf_counter() - t0)


# --- random Lipschitz data ---------------------------------------------------

def _trig_profile(slope, amps, freqs, phases, name):
    amps = np.asarray(amps, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    phases = np.asarray(phases, dtype=float)

    def ev(r):
        r = np.asarray(r, dtype=float)
        return slope * r + np.sum(amps[:, None] * np.sin(np.outer(freqs, r) + phases[:, None]),
                                  axis=0).reshape(r.shape)

    def d1(r):
        r = np.asarray(r, dtype=float)
        return slope + np.sum((amps * freqs)[:, None] * np.cos(np.outer(freqs, r)
                                                              + phases[:, None]),
                              axis=0).reshape(r.shape)

    def d2(r):
        r = np.asarray(r, dtype=float)
        return -np.sum((amps * freqs**2)[:, None] * np.sin(np.outer(freqs, r)
                                                           + phases[:, None]),
                       axis=0).reshape(r.shape)

    lip = abs(slope) + float(np.sum(np.abs(amps * freqs)))
    return InitialProfile(name, ev, d1, d2, lip, lip)


def _plus_bump(base: InitialProfile, shift, amp, center, width, name):
    """base + shift + amp * cutoff(|r - center|/width): exact zero tail beyond center + 2 width."""

    def parts(r):
        r = np.asarray(r, dtype=float)
        z = (r - center) / width
        s, d1, d2 = cutoff(np.abs(z))
        return r, s, np.sign(z) * d1 / width, d2 / width**2

    def ev(r):
        r, s, _, _ = parts(r)
        return base.eval(r) + shift + amp * s

    def d1(r):
        r, _, s1, _ = parts(r)
        return base.d1(r) + amp * s1

    def d2(r):
        r, _, _, s2 = parts(r)
        return base.d2(r) + amp * s2

    extra = 2.0 * amp / width
    return InitialProfile(name, ev, d1, d2, base.lip_lower + extra, base.lip_upper + extra)


def random_ordered_pair(rng: np.random.Generator, hi: float = 10.0):
    """(v0, w0) with v0 <= w0 everywhere and identical slopes near r = hi."""
    k = int(rng.integers(1, 4))
    slope = float(rng.uniform(-1.0, 1.0))
    freqs = rng.uniform(0.3, 2.0, k)
    amps = rng.uniform(-0.5, 0.5, k) / freqs / k
    phases = rng.uniform(0, 2 * np.pi, k)
    v0 = _trig_profile(slope, amps, freqs, phases, "random_lipschitz")
    shift = float(rng.choice([0.0, rng.uniform(0.0, 0.5)]))
    amp = float(rng.uniform(0.05, 1.0))
    width = float(rng.uniform(0.3, 1.5))
    center = float(rng.uniform(0.0, hi - 3 * width))
    w0 = _plus_bump(v0, shift, amp, center, width, "random_lipschitz_raised")
    return v0, w0


# --- comparison ----------------------------------------------------------------

def comparison_config(t_end: float = 0.05, **kw) -> SchemeConfig:
    base = dict(t_end=t_end, boundary_far="frozen_initial_slope", dt_policy="uniform")
    base.update(kw)
    return SchemeConfig(**base)


def comparison_experiment(v0: InitialProfile, w0: InitialProfile, params: Params,
                          cfg: Optional[SchemeConfig] = None,
                          grid: Optional[Grid1D] = None,
                          window: Optional[float] = None) -> ExperimentReport:
    """Evolve an ordered pair with a shared time step and record the worst crossing.

    The uniform time-step policy makes both runs take identical steps, so
    the discrete comparison principle applies node by node.  ``window``
    restricts the measurement to r <= window.
    """
    t0 = time.perf_counter()
    grid = grid or Grid1D.polar(0.0, 10.0, 401)
    cfg = cfg or comparison_config()
    r = grid.radii
    gap0 = v0.eval(r) - w0.eval(r)
    if np.any(gap0 > 0):
        i = int(np.argmax(gap0))
        raise SetupError(f"precondition v0 <= w0 violated at r={r[i]:.6g} "
                         f"(v0 - w0 = {gap0[i]:.3g})")
    tv = run(v0, grid, params, cfg)
    tw = run(w0, grid, params, cfg)
    if tv.dt_history != tw.dt_history:
        raise SetupError("paired runs took different time steps")
    sel = r <= window if window is not None else np.ones_like(r, dtype=bool)
    worst = 0.0
    for sv, sw in zip(tv.snapshots, tw.snapshots):
        worst = max(worst, float(np.max(np.maximum(sv.values[sel] - sw.values[sel], 0.0))))
    return ExperimentReport(
        "comparison",
        {"v0": v0.name, "w0": w0.name, "c": params.c, "n": grid.n, "hi": grid.hi,
         "t_end": cfg.t_end},
        {"max_crossing": worst, "steps": len(tv.dt_history)},
        worst <= 1e-10, time.perf_counter() - t0)


def comparison_sweep(n_pairs: int = 20, cs: Sequence[float] = (-1.0, 0.0, 1.0),
                     seed: int = 0, grid: Optional[Grid1D] = None,
                     t_end: float = 0.05, window: Optional[float] = None) -> ExperimentReport:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    grid = grid or Grid1D.polar(0.0, 10.0, 401)
    pairs = [random_ordered_pair(rng, grid.hi) for _ in range(n_pairs)]
    worst = 0.0
    per_c = {}
    for c in cs:
        m = 0.0
        for v0, w0 in pairs:
            rep = comparison_experiment(v0, w0, Params(c=c), comparison_config(t_end), grid,
                                        window)
            m = max(m, rep.measured["max_crossing"])
        per_c[str(c)] = m
        worst = max(worst, m)
    return ExperimentReport("comparison_sweep",
                            {"n_pairs": n_pairs, "cs": list(cs), "seed": seed, "n": grid.n,
                             "hi": grid.hi, "t_end": t_end},
                            {"max_crossing": worst, "per_c": per_c}, worst <= 1e-10,
                            time.perf_counter() - t0)


# --- gradient bounds -----------------------------------------------------------

def _slope_bounds(initial: InitialProfile, r):
    """Declared (L0, L1), checked against the sampled slopes."""
    if not initial.check_bounds(r, tol=1e-9):
        raise SetupError(f"{initial.name}: declared slope bounds are violated on the grid")
    return max(0.0, initial.lip_lower), max(0.0, initial.lip_upper)


def gradient_experiment(initial: InitialProfile, params: Params,
                        cfg: Optional[SchemeConfig] = None,
                        grid: Optional[Grid1D] = None, buffer: float = 0.2,
                        n_records: int = 25) -> ExperimentReport:
    """Discrete gradients stay in [-max(1, L0) - 10h, L1 + 10h] (c >= 0).

    For c < 0 the run uses (-u0, -c), whose solution is the negated one.
    The outer ``buffer`` fraction of the domain is excluded.
    """
    t0 = time.perf_counter()
    grid = grid or Grid1D.polar(0.0, 10.0, 401)
    cfg = cfg or SchemeConfig(t_end=0.05)
    mirrored = params.c < 0
    if mirrored:
        initial, params = initial.negated(), Params(c=-params.c, r0=params.r0)
    r = grid.radii
    h = grid.h
    L0, L1 = _slope_bounds(initial, r)
    lo = -max(1.0, L0) - 10 * h
    hi = L1 + 10 * h
    marks = tuple(np.linspace(0, cfg.t_end, n_records + 1)[1:-1])
    traj = run(initial, grid, params, SchemeConfig(**{**asdict(cfg), "record_times": marks,
                                                       "record_every": 10**9}))
    keep = r[1:] <= (1.0 - buffer) * grid.hi
    gmin, gmax = math.inf, -math.inf
    for s in traj.snapshots:
        g = np.diff(s.values) / h
        g = g[keep]
        gmin, gmax = min(gmin, float(g.min())), max(gmax, float(g.max()))
    return ExperimentReport(
        "gradient",
        {"profile": initial.name, "c": params.c, "mirrored": mirrored, "n": grid.n,
         "t_end": cfg.t_end, "L0": L0, "L1": L1},
        {"min_gradient": gmin, "max_gradient": gmax, "lower_bound": lo, "upper_bound": hi},
        gmin >= lo and gmax <= hi, time.perf_counter() - t0)


# --- time regularity -------------------------------------------------------------

def holder_constant(barrier) -> float:
    C0 = barrier.details["C0"]
    L0 = max(1.0, C0)
    return 2.0 * math.sqrt((C0 + L0) * barrier.Cbar) + L0 + C0


def fit_exponent(t, y) -> tuple[float, float]:
    """Least-squares fit y = A t^alpha in log-log coordinates; returns (alpha, A)."""
    slope, icpt = np.polyfit(np.log(t), np.log(y), 1)
    return float(slope), float(math.exp(icpt))


def time_regularity_experiment(initial: InitialProfile, params: Params,
                               cfg: Optional[SchemeConfig] = None,
                               grid: Optional[Grid1D] = None,
                               window=(1e-4, 1e-2), n_times: int = 21) -> ExperimentReport:
    """Lipschitz-in-time check for compatible data, sqrt(t) fit otherwise."""
    t0 = time.perf_counter()
    grid = grid or Grid1D.polar(0.0, 10.0, 801)
    r = grid.radii
    h = grid.h
    compat = compatibility_check(initial, params, grid)
    u0 = initial.eval(r)
    if compat.compatible:
        cfg = cfg or SchemeConfig(t_end=0.05)
        spec = barrier_constant(initial, params, grid)
        marks = tuple(np.linspace(0, cfg.t_end, n_times)[1:-1])
        traj = run(initial, grid, params,
                   SchemeConfig(**{**asdict(cfg), "record_times": marks, "record_every": 10**9}))
        dt_max = max(traj.dt_history)
        worst = -math.inf
        rates = []
        for s in traj.snapshots[1:]:
            dev = float(np.max(np.abs(s.values - u0)))
            worst = max(worst, dev - spec.Cbar * s.t - (10 * h + 10 * dt_max))
            rates.append(dev / s.t)
        return ExperimentReport(
            "time_regularity",
            {"profile": initial.name, "c": params.c, "n": grid.n, "compatible": True,
             "t_end": cfg.t_end},
            {"Cbar": spec.Cbar, "max_rate": max(rates), "worst_excess": worst},
            worst <= 0.0, time.perf_counter() - t0)
    cfg = cfg or SchemeConfig(t_end=window[1])
    ts = np.geomspace(window[0], window[1], n_times)
    marks = tuple(ts[:-1])
    traj = run(initial, grid, params,
               SchemeConfig(**{**asdict(cfg), "t_end": float(ts[-1]), "record_times": marks,
                               "record_every": 10**9}))
    snaps = [traj.at(t) for t in ts]
    amp = np.array([abs(s.values[1] - u0[1]) for s in snaps])
    alpha, A = fit_exponent(ts, amp)
    barrier = barrier_no_compat(initial, params)
    C = holder_constant(barrier)
    env_excess = max(float(np.max(np.abs(s.values - u0))) - (C * math.sqrt(s.t) + barrier.B(s.t))
                     for s in snaps)
    ok = 0.4 <= alpha <= 0.6 and env_excess <= 0.0
    return ExperimentReport(
        "time_regularity",
        {"profile": initial.name, "c": params.c, "n": grid.n, "compatible": False,
         "window": list(window), "r_star": float(r[1])},
        {"exponent": alpha, "amplitude": A, "holder_C": C, "Cbar": barrier.Cbar,
         "envelope_excess": env_excess, "final_deviation": float(amp[-1])},
        ok, time.perf_counter() - t0)


# --- (b, sigma) assumptions ------------------------------------------------------

def check_bs_assumptions(coeffs: GenCoeffs, box: float = 10.0, n: int = 201,
                         asymptotic: bool = True) -> dict:
    """Sampled constants of the structural assumption on (b, sigma).

    delta1 is a sup of slopes in p that for the spiral is only approached
    as |p| -> infinity, so far-out probes are added when ``asymptotic``.
    """
    if not (math.isfinite(box) and box > 0):
        raise ValueError("sample box must be finite and positive")
    s = np.linspace(-box, box, n)
    Q, P = np.meshgrid(s, s, indexing="ij")
    B = coeffs.b(Q, P)
    d1 = np.abs(np.diff(B, axis=1)) / np.diff(s)[None, :]
    delta1 = float(d1.max())
    if asymptotic:
        far = np.array([1e8, 2e8])
        for q in (-box, 0.0, box):
            for sign in (1.0, -1.0):
                p = sign * far
                bb = coeffs.b(np.full(2, q), p)
                delta1 = max(delta1, float(abs(bb[1] - bb[0]) / abs(p[1] - p[0])))
    dq = np.diff(B, axis=0) / np.diff(s)[:, None]
    delta2 = float(dq.min())
    delta3 = float(dq.max())
    ps = s
    if asymptotic:
        ps = np.concatenate([s, [-1e8, 1e8]])
    delta4 = float(np.max(np.abs(coeffs.b(np.zeros_like(ps), ps)) / np.sqrt(1.0 + ps * ps)))
    sig = float(np.max(np.abs(coeffs.sigma(ps))))
    margin = 2.0 * delta2 - sig * sig
    return {"delta1": delta1, "delta2": delta2, "delta3": delta3, "delta4": delta4,
            "sigma_inf": sig, "margin": margin, "passes": bool(margin > 0), "box": box,
            "label": coeffs.label}


# --- psi map -------------------------------------------------------------------

def psi_map(x, theta):
    """(1 - i(x)) (x, e^{i theta}) + i(x) (0, e^{x + i theta}) as points of R^3."""
    x = np.asarray(x, dtype=float)
    theta = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
    io, _, _ = smooth_step(x)
    g = (1.0 - io) + io * np.exp(x)
    return np.stack([(1.0 - io) * x, g * np.cos(theta), g * np.sin(theta)], axis=-1)


def psi_jacobian(x, theta):
    """Analytic D psi with shape (..., 3, 2): columns d/dx and d/dtheta."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    io, i1, _ = smooth_step(x)
    ex = np.exp(x)
    g = (1.0 - io) + io * ex
    g1 = i1 * (ex - 1.0) + io * ex
    ct, st = np.cos(theta), np.sin(theta)
    J = np.zeros(x.shape + (3, 2))
    J[..., 0, 0] = (1.0 - io) - i1 * x
    J[..., 1, 0] = g1 * ct
    J[..., 2, 0] = g1 * st
    J[..., 1, 1] = -g * st
    J[..., 2, 1] = g * ct
    return J


def psi_lower_bound_survey(n_samples: int = 100_000,
                           delta0_candidates=(0.5, 0.25, 0.1, 0.05),
                           seed: int = 0, x_range=(-3.0, 3.0)) -> dict:
    """Empirical lower bounds for both injectivity inequalities of psi.

    Pairs are drawn with the second point a random (log-uniform sized)
    perturbation of the first; coincident pairs are dropped.  Each delta0
    candidate is judged on ``n_samples`` admissible pairs.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    rng = np.random.default_rng(seed)
    draw = 2 * n_samples
    while True:
        x = rng.uniform(*x_range, draw)
        th = rng.uniform(-np.pi, np.pi, draw)
        mag = 10.0 ** rng.uniform(-6, 0, draw)
        ang = rng.uniform(0, 2 * np.pi, draw)
        y = x + mag * np.cos(ang)
        sg = th + mag * np.sin(ang)
        d = np.hypot(x - y, th - sg)
        keep = (d > 0) & (np.abs(th - sg) <= np.pi / 2)
        x, th, y, sg, d = x[keep], th[keep], y[keep], sg[keep], d[keep]
        diff = psi_map(x, th) - psi_map(y, sg)
        dist = np.linalg.norm(diff, axis=-1)
        if np.sum(dist <= min(delta0_candidates)) >= n_samples:
            break
        draw *= 2
    J = psi_jacobian(x, th)
    contr = np.linalg.norm(np.einsum("nij,ni->nj", J, diff), axis=-1)
    ratio1 = dist / d
    ratio2 = contr / d
    per = {}
    best = None
    for d0 in delta0_candidates:
        idx = np.flatnonzero(dist <= d0)[:n_samples]
        m1 = float(ratio1[idx].min())
        m2 = float(ratio2[idx].min())
        per[float(d0)] = {"m1": m1, "m2": m2, "pairs": int(idx.size)}
        m = min(m1, m2)
        if best is None or m > best[1]:
            best = (float(d0), m)
    delta0, m_psi = best
    return {"m_psi_empirical": m_psi, "delta0": delta0, "per_delta0": per,
            "passes": bool(m_psi >= 1e-3)}


# --- polar / log cross-validation ----------------------------------------------

def polar_log_cross_validation(initial: InitialProfile, params: Params,
                               levels: Sequence[int] = (401, 801, 1601), hi: float = 10.0,
                               annulus=(0.2, 5.0), t_end: float = 0.02) -> ExperimentReport:
    """Run the polar scheme on [0, hi] and the log scheme on the annulus in lockstep.

    The log run takes its Dirichlet data from the polar state at each step.
    The discrepancy is the sup over log nodes of |u_log - u_polar|, the polar
    state being read through a cubic spline.
    """
    t0 = time.perf_counter()
    a, b = annulus
    cfg_p = SchemeConfig(t_end=t_end, dt_policy="uniform")
    cfg_l = SchemeConfig(t_end=t_end, dt_policy="uniform", boundary_origin="dirichlet",
                         boundary_far="dirichlet")
    coeffs = spiral_coeffs(params)
    errs = []
    for n in levels:
        gp = Grid1D.polar(0.0, hi, n)
        ia, ib = round(a / gp.h), round(b / gp.h)
        if not (abs(ia * gp.h - a) < 1e-9 and abs(ib * gp.h - b) < 1e-9):
            raise SetupError(f"annulus ends must be polar nodes (n={n})")
        gl = Grid1D.log(math.log(a), math.log(b), (n - 1) // 2 + 1)
        sp = initial.sample(gp)
        sl = initial.sample(gl)
        while sp.t < t_end * (1 - 1e-14):
            dt = min(cfl_dt(sp, params, cfg_p), cfl_dt(sl, params, cfg_l, coeffs))
            dt = min(dt, t_end - sp.t)
            sp = step_polar(sp, dt, params, cfg_p, check=False)
            bc = {"left": sp.values[ia], "right": sp.values[ib]}
            sl = step_general(sl, dt, coeffs, cfg_l, params, bc=bc, check=False)
        ref = CubicSpline(gp.radii, sp.values)(gl.radii)
        errs.append(float(np.max(np.abs(sl.values - ref))))
    factors = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return ExperimentReport(
        "polar_log_cross_validation",
        {"profile": initial.name, "c": params.c, "levels": list(levels), "t_end": t_end,
         "annulus": list(annulus)},
        {"discrepancy": errs, "factors": factors},
        all(f >= 1.7 for f in factors), time.perf_counter() - t0)


# --- barrier sandwiches ------------------------------------------------------------

def barrier_sandwich_experiment(initial: InitialProfile, params: Params,
                                grid: Optional[Grid1D] = None, t_end: float = 0.05,
                                n_times: int = 26) -> ExperimentReport:
    """|u(t) - u0| against the barrier offset, with the barrier picked by compatibility.

    Compatible data use u0 +- Cbar t with slack 10h + 10dt; otherwise the
    inverse-r barrier u0 +- (Cbar t/r + B(t)) on interior nodes, slack 10h.
    """
    t0 = time.perf_counter()
    grid = grid or Grid1D.polar(0.0, 10.0, 801)
    r = grid.radii
    h = grid.h
    compat = compatibility_check(initial, params, grid)
    spec = (barrier_constant(initial, params, grid) if compat.compatible
            else barrier_no_compat(initial, params))
    marks = tuple(np.linspace(0, t_end, n_times)[1:-1])
    traj = run(initial, grid, params, SchemeConfig(t_end=t_end, record_times=marks,
                                                   record_every=10**9))
    dt_max = max(traj.dt_history)
    u0 = initial.eval(r)
    interior = slice(1, -1)
    worst = -math.inf
    for s in traj.snapshots[1:]:
        dev = np.abs(s.values - u0)[interior]
        off = spec.offset(s.t, r[interior])
        slack = 10 * h + (10 * dt_max if compat.compatible else 0.0)
        worst = max(worst, float(np.max(dev - off)) - slack)
    return ExperimentReport(
        "barrier_sandwich",
        {"profile": initial.name, "c": params.c, "n": grid.n, "t_end": t_end,
         "kind": spec.kind},
        {"Cbar": spec.Cbar, "worst_excess": worst}, worst <= 0.0, time.perf_counter() - t0)


# --- level set -----------------------------------------------------------------

def levelset_experiment(initial: InitialProfile, params: Params, a: float = 0.5,
                        b: float = 4.0, n2d: int = 256, t_end: float = 0.02,
                        grid1d: Optional[Grid1D] = None) -> ExperimentReport:
    """Hausdorff distance between the level-set zero curve and the graph spiral."""
    from .levelset import (dense_spiral, extract_zero_level, hausdorff, restrict_radius,
                           run_coupled)

    t0 = time.perf_counter()
    res = run_coupled(initial, params, a, b, n2d, t_end, grid1d=grid1d)
    lo, hi = 1.2 * a, 0.8 * b
    pts = restrict_radius(extract_zero_level(res.field).points, lo, hi)
    ref = dense_spiral(res.profile, lo, hi)
    dist = hausdorff(pts, ref)
    cells = dist / res.field.h
    return ExperimentReport(
        "levelset_cross_validation",
        {"profile": initial.name, "c": params.c, "annulus": [a, b], "n2d": n2d,
         "t_end": t_end},
        {"hausdorff": dist, "cells": cells, "h2d": res.field.h, "steps": res.steps},
        cells <= 3.0, time.perf_counter() - t0)


def circle_experiment(radius: float = 1.0, n2d: int = 256, extent: Optional[float] = None,
                      n_times: int = 16) -> ExperimentReport:
    """Shrinking circle under curvature flow, up to the time where R = R0/2."""
    from .levelset import run_circle

    t0 = time.perf_counter()
    extent = extent or 2.5 * radius
    t_half = 3.0 * radius**2 / 8.0
    times = np.linspace(0, t_half, n_times + 1)[1:]
    track = run_circle(radius, extent, n2d, times)
    errs = [abs(R / math.sqrt(radius**2 - 2 * t) - 1.0) for t, R in track]
    worst = max(errs)
    return ExperimentReport(
        "shrinking_circle", {"R0": radius, "n2d": n2d, "extent": extent, "t_end": t_half},
        {"max_rel_error": worst, "final_radius": track[-1][1]}, worst <= 0.02,
        time.perf_counter() - t0)


# --- far-field insensitivity -------------------------------------------------

def farfield_experiment(hi: float = 10.0, n: int = 401, n_fine: int = 801,
                        window: float = 5.0, seed: int = 0) -> ExperimentReport:
    """Comparison, gradient and sqrt(t) measurements on [0, window] for [0, hi] vs [0, 2 hi].

    The doubled domain keeps the cell size, so differences come only from
    the far boundary.
    """
    t0 = time.perf_counter()
    out = {}
    for label, scale in (("base", 1), ("doubled", 2)):
        g = Grid1D.polar(0.0, scale * hi, scale * (n - 1) + 1)
        gf = Grid1D.polar(0.0, scale * hi, scale * (n_fine - 1) + 1)
        cmp_ = comparison_sweep(n_pairs=5, seed=seed, grid=g, window=window, t_end=0.05)
        gr = _gradient_window(g, window)
        tr = _sqrt_layer(gf)
        out[label] = {"crossing": cmp_.measured["max_crossing"], **gr, **tr}
    diffs = {k: abs(out["base"][k] - out["doubled"][k]) for k in out["base"]}
    worst = max(diffs.values())
    return ExperimentReport("far_field", {"hi": hi, "n": n, "n_fine": n_fine, "window": window},
                            {"values": out, "differences": diffs, "max_difference": worst},
                            worst <= 1e-3, time.perf_counter() - t0)


def _gradient_window(grid, window):
    from .core import make_profile

    prof = make_profile("sine", amp=0.3, k=1.0)
    traj = run(prof, grid, Params(c=1.0), SchemeConfig(t_end=0.05, record_every=50))
    r = grid.radii
    keep = r[1:] <= window
    g = np.array([np.diff(s.values)[keep] / grid.h for s in traj.snapshots])
    return {"min_gradient": float(g.min()), "max_gradient": float(g.max())}


def _sqrt_layer(grid):
    from .core import make_profile

    rep = time_regularity_experiment(make_profile("zero"), Params(c=1.0), grid=grid)
    return {"exponent": rep.measured["exponent"], "amplitude": rep.measured["amplitude"]}


# --- acceptance suite ----------------------------------------------------------

def periodicity_error(n: int = 10_000, seed: int = 0, x_range=(-3.0, 3.0)) -> float:
    """max |psi(x, theta + 2 pi) - psi(x, theta)| over angles on a 2^-40 lattice.

    On that lattice theta + 2 pi is computed without rounding, so any
    nonzero result would be a genuine defect of the map.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(*x_range, n)
    th = np.round(rng.uniform(-np.pi, np.pi, n) * 2.0**40) / 2.0**40
    return float(np.max(np.abs(psi_map(x, th + 2 * np.pi) - psi_map(x, th))))


def psi_branch_error(n: int = 10_000, seed: int = 0) -> float:
    """Deviation from the two plateau formulas, angles drawn from [0, 2 pi)."""
    rng = np.random.default_rng(seed)
    th = rng.uniform(0.0, 2 * np.pi, n)
    xl = rng.uniform(-5.0, 0.0, n)
    xr = rng.uniform(1.0, 4.0, n)
    left = np.stack([xl, np.cos(th), np.sin(th)], axis=-1)
    right = np.stack([np.zeros(n), np.exp(xr) * np.cos(th), np.exp(xr) * np.sin(th)], axis=-1)
    return float(max(np.max(np.abs(psi_map(xl, th) - left)),
                     np.max(np.abs(psi_map(xr, th) - right))))


def _c1():
    rep = chain_rule_experiment()
    ok = rep.passed and rep.runtime < 1.0
    return ok, f"max rel residual {rep.measured['max_rel_residual']:.2e}, {rep.runtime:.2f}s"


def _c2():
    rep = geometric_law_experiment()
    return rep.passed, f"max rel residual {rep.measured['max_rel_residual']:.2e}"


def _c3(seed=0):
    rep = comparison_sweep(20, (-1.0, 0.0, 1.0), seed)
    ok = rep.passed and rep.runtime < 120
    return ok, f"max crossing {rep.measured['max_crossing']:.2e}, {rep.runtime:.1f}s"


def _c4():
    from .core import make_profile

    prof = make_profile("sine", amp=0.3, k=1.0)
    a = gradient_experiment(prof, Params(c=1.0))
    b = gradient_experiment(prof, Params(c=-1.0))
    m, mm = a.measured, b.measured
    return a.passed and b.passed, (
        f"c=1 gradients [{m['min_gradient']:.4f}, {m['max_gradient']:.4f}] within "
        f"[{m['lower_bound']:.4f}, {m['upper_bound']:.4f}]; mirrored "
        f"[{mm['min_gradient']:.4f}, {mm['max_gradient']:.4f}]")


def _c5():
    from .barriers import mollify_initial
    from .core import make_profile

    p = Params(c=1.0)
    rep = barrier_sandwich_experiment(mollify_initial(make_profile("zero"), 0.1, p), p,
                                      t_end=0.05)
    return rep.passed, (f"Cbar {rep.measured['Cbar']:.3f}, worst excess "
                        f"{rep.measured['worst_excess']:.3e}")


def _c6():
    from .core import make_profile

    rep = barrier_sandwich_experiment(make_profile("zero"), Params(c=1.0), t_end=0.01)
    return rep.passed, (f"Cbar {rep.measured['Cbar']:.3f}, worst excess "
                        f"{rep.measured['worst_excess']:.3e}")


def _c7():
    from .core import make_profile

    rep = time_regularity_experiment(make_profile("zero"), Params(c=1.0),
                                     grid=Grid1D.polar(0.0, 10.0, 801))
    m = rep.measured
    ok = rep.passed and rep.runtime < 300
    return ok, (f"exponent {m['exponent']:.4f}, envelope excess {m['envelope_excess']:.3e}, "
                f"{rep.runtime:.1f}s")


def _c8():
    from .core import make_profile

    rep = polar_log_cross_validation(make_profile("compatible_ramp", c=1.0), Params(c=1.0))
    return rep.passed, ("discrepancies " + ", ".join(f"{e:.3e}" for e in
                                                    rep.measured["discrepancy"])
                        + "; factors " + ", ".join(f"{f:.3f}" for f in
                                                   rep.measured["factors"]))


def _c9():
    from .core import make_profile

    rep = levelset_experiment(make_profile("sine", amp=0.5, k=1.0), Params(c=1.0),
                              0.5, 4.0, 256, 0.02)
    return rep.passed, f"Hausdorff {rep.measured['cells']:.3f} cells"


def _c10():
    rep = circle_experiment(1.0, 256)
    return rep.passed, f"max relative radius error {rep.measured['max_rel_error']:.2e}"


def _c11():
    from .pde import radial_heat_coeffs, spiral_coeffs

    ok = True
    worst = 0.0
    for c in (-2.0, -1.0, 0.0, 0.5, 1.0):
        d = check_bs_assumptions(spiral_coeffs(Params(c=c)))
        exp = {"delta1": abs(c), "delta2": 1.0, "delta3": 1.0, "delta4": abs(c),
               "sigma_inf": 1.0}
        err = max(abs(d[k] - v) for k, v in exp.items())
        worst = max(worst, err)
        ok &= err <= 1e-9 and d["passes"]
    n2 = check_bs_assumptions(radial_heat_coeffs(2))["passes"]
    n3 = check_bs_assumptions(radial_heat_coeffs(3))["passes"]
    ok &= (not n2) and n3
    return ok, f"spiral constants within {worst:.1e}; heat n=2 passes={n2}, n=3 passes={n3}"


def _c12():
    s = psi_lower_bound_survey(100_000)
    per = periodicity_error()
    br = psi_branch_error()
    ok = s["passes"] and per == 0.0 and br == 0.0
    return ok, (f"m_psi {s['m_psi_empirical']:.4f} at delta0={s['delta0']}, periodicity "
                f"{per:.1e}, branches {br:.1e}")


def _c13():
    from .barriers import mollify_initial
    from .core import make_profile

    p = Params(c=1.0)
    grid = Grid1D.polar(0.0, 10.0, 4001)
    consts = []
    compat = []
    for eps in (0.2, 0.1, 0.05):
        m = mollify_initial(make_profile("zero"), eps, p)
        compat.append(compatibility_check(m, p, grid).compatible)
        consts.append(m.meta["C0_bar"])
    spread = (max(consts) - min(consts)) / min(consts)
    return all(compat) and spread <= 0.01, (
        f"compatible {compat}, bound constants " + ", ".join(f"{v:.5f}" for v in consts)
        + f", spread {spread:.2e}")


def _c14():
    rep = farfield_experiment()
    return rep.passed, f"max change on [0, 5]: {rep.measured['max_difference']:.2e}"


def acceptance_suite():
    """(id, title, check) triples; each check returns (passed, detail)."""
    return [
        (1, "chain-rule identity", _c1),
        (2, "geometric-law identity", _c2),
        (3, "discrete comparison principle", _c3),
        (4, "gradient box", _c4),
        (5, "barrier sandwich, compatible data", _c5),
        (6, "barrier sandwich, incompatible data", _c6),
        (7, "sqrt(t) layer", _c7),
        (8, "polar/log cross-validation", _c8),
        (9, "level-set cross-validation", _c9),
        (10, "shrinking circle", _c10),
        (11, "(b, sigma) assumption checker", _c11),
        (12, "psi survey", _c12),
        (13, "mollifier invariance", _c13),
        (14, "far-field insensitivity", _c14),
    ]


def geometric_law_residual(initial: InitialProfile, params: Params,
                           levels: Sequence[int] = (201, 401, 801), hi: float = 10.0,
                           t_probe: float = 0.01, band=(0.5, 8.0)) -> ExperimentReport:
    """|V_n - (c + kappa)| from discrete differences of computed solutions.

    u_t is the one-step difference quotient at t_probe, u_r and u_rr are
    centred differences; the residual is the max over nodes in ``band``.
    """
    from .solver import step_polar as _step

    t0 = time.perf_counter()
    cfg = SchemeConfig(t_end=t_probe, dt_policy="uniform")
    res = []
    hs = []
    for n in levels:
        grid = Grid1D.polar(0.0, hi, n)
        traj = run(initial, grid, params, cfg)
        s = traj.final
        dt = cfl_dt(s, params, cfg)
        s2 = _step(s, dt, params, cfg)
        r = grid.radii
        h = grid.h
        u = s.values
        ut = (s2.values - u) / dt
        ur = (u[2:] - u[:-2]) / (2 * h)
        urr = (u[2:] - 2 * u[1:-1] + u[:-2]) / (h * h)
        ri = r[1:-1]
        vn = ri * ut[1:-1] / np.sqrt(1.0 + (ri * ur) ** 2)
        law = params.c + curvature(ri, ur, urr)
        sel = (ri >= band[0]) & (ri <= band[1])
        res.append(float(np.max(np.abs(vn - law)[sel])))
        hs.append(h)
    order = float(np.polyfit(np.log(hs), np.log(res), 1)[0])
    return ExperimentReport(
        "geometric_law_residual",
        {"profile": initial.name, "c": params.c, "levels": list(levels), "t_probe": t_probe},
        {"residuals": res, "order": order}, order >= 1.0, time.perf_counter() - t0)
