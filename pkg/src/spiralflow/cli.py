"""Scenario runner: ``spiralflow run <config> [--set k=v]... [--out DIR]`` and ``spiralflow verify-all``.

A configuration is INI text::

    [scenario]
    kind = evolve_polar        # evolve_log, evolve_levelset, experiment:<name>
    seed = 0

    [params]
    c = 1.0

    [grid]
    lo = 0
    hi = 10
    n = 401

    [scheme]
    t_end = 0.01

    [initial]
    name = zero                # remaining keys are passed to the profile factory
"""

from __future__ import annotations

import argparse
import configparser
import csv
import difflib
import inspect
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import LOG, POLAR, PROFILES, Grid1D, Params, make_profile, spiral_points
from .solver import SchemeConfig, SolverError, run

EXPERIMENTS = (
    "comparison", "comparison_sweep", "gradient", "time_regularity", "barrier_sandwich",
    "bs_assumptions", "psi_survey", "cross_validation", "levelset", "circle",
    "chain_rule", "geometric_law", "far_field",
)
KINDS = ("evolve_polar", "evolve_log", "evolve_levelset") + tuple(
    f"experiment:{e}" for e in EXPERIMENTS)


SCHEMA = {
    "scenario": {"kind": str, "seed": int},
    "params": {"c": float, "r0": float},
    "grid": {"lo": float, "hi": float, "n": int},
    "scheme": {"t_end": float, "cfl_safety": float, "boundary_origin": str,
               "boundary_far": str, "record_every": int, "dt_policy": str,
               "record_times": "floats"},
    "levelset": {"a": float, "b": float, "n2d": int},
    "experiment": {"n_pairs": int, "mollify_eps": float, "radius": float,
                   "samples": int, "coeffs": str, "dimension": int, "box": float},
    "output": {"dir": str},
}
PROFILE_SECTIONS = ("initial", "upper")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class ScenarioConfig:
    kind: str
    params: Params
    grid: Grid1D
    scheme: SchemeConfig
    initial: tuple
    upper: Optional[tuple] = None
    levelset: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    out_dir: str = "out"
    seed: int = 0


def _convert(kind, raw):
    if kind == "floats":
        return tuple(float(v) for v in raw.replace(",", " ").split())
    return kind(raw)


def _suggest(key, options):
    close = difflib.get_close_matches(key, list(options), n=1, cutoff=0.6)
    return f"; did you mean {close[0]!r}?" if close else ""


def _profile_kwargs(section, name, items, errors):
    if name not in PROFILES:
        errors.append(f"{section}.name: unknown profile {name!r}{_suggest(name, PROFILES)}")
        return None
    sig = inspect.signature(PROFILES[name])
    kw = {}
    for key, raw in items.items():
        if key == "name":
            continue
        if key not in sig.parameters:
            errors.append(f"{section}.{key}: unknown parameter for profile {name!r}"
                          f"{_suggest(key, sig.parameters)}")
            continue
        try:
            kw[key] = float(raw)
        except ValueError:
            errors.append(f"{section}.{key}: expected a number, got {raw!r}")
    return (name, kw)


def _read(text):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"line {exc.lineno}: key outside of any [section]"]) from None
    except configparser.ParsingError as exc:
        raise ConfigError([f"line {ln}: cannot parse {line!r}" for ln, line in exc.errors]) \
            from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError([f"line {exc.lineno}: {exc.message.splitlines()[0]}"]) from None
    return cp


def parse_config(text: str, overrides=()) -> ScenarioConfig:
    """Parse and validate; every problem found is reported in one ConfigError."""
    cp = _read(text)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError([f"--set {item!r}: expected section.key=value"])
        path, value = item.split("=", 1)
        sec, key = path.strip().split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, key, value.strip())

    errors = []
    values = {}
    for sec in cp.sections():
        if sec in PROFILE_SECTIONS:
            continue
        if sec not in SCHEMA:
            known = list(SCHEMA) + list(PROFILE_SECTIONS)
            errors.append(f"[{sec}]: unknown section{_suggest(sec, known)}")
            continue
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                errors.append(f"{sec}.{key}: unknown key{_suggest(key, SCHEMA[sec])}")
                continue
            try:
                values[(sec, key)] = _convert(SCHEMA[sec][key], raw)
            except ValueError:
                errors.append(f"{sec}.{key}: cannot convert {raw!r}")

    def get(sec, key, default):
        return values.get((sec, key), default)

    kind = get("scenario", "kind", None)
    if kind is None:
        errors.append("scenario.kind: missing")
    elif kind not in KINDS:
        errors.append(f"scenario.kind: unknown kind {kind!r}{_suggest(kind, KINDS)}")

    params = None
    try:
        params = Params(c=get("params", "c", 1.0), r0=get("params", "r0", 1.0))
    except ValueError as exc:
        errors.append(f"params: {exc}")

    grid = None
    coord = LOG if kind == "evolve_log" else POLAR
    lo_default = math.log(0.1) if coord == LOG else 0.0
    try:
        grid = Grid1D(coord, get("grid", "lo", lo_default), get("grid", "hi", 10.0),
                      get("grid", "n", 401))
    except ValueError as exc:
        errors.append(f"grid: {exc}")

    scheme = None
    t_end = get("scheme", "t_end", 0.01)
    if not (t_end > 0 and math.isfinite(t_end)):
        errors.append(f"scheme.t_end: must be positive and finite, got {t_end}")
    else:
        try:
            kw = {k: v for (s, k), v in values.items() if s == "scheme"}
            if kind == "evolve_log":
                kw.setdefault("boundary_origin", "log_asymptotic")
            scheme = SchemeConfig(**kw)
        except ValueError as exc:
            errors.append(f"scheme: {exc}")

    profiles = {}
    for sec in PROFILE_SECTIONS:
        if not cp.has_section(sec):
            continue
        items = dict(cp.items(sec))
        if "name" not in items:
            errors.append(f"{sec}.name: missing")
            continue
        profiles[sec] = _profile_kwargs(sec, items["name"], items, errors)
    if "initial" not in profiles and kind and not kind.startswith("experiment:"):
        errors.append("initial.name: missing [initial] section")

    lv = {k: v for (s, k), v in values.items() if s == "levelset"}
    if lv and not (0 < lv.get("a", 0.5) < lv.get("b", 4.0)):
        errors.append("levelset: need 0 < a < b")
    if errors:
        raise ConfigError(errors)
    seed = get("scenario", "seed", 0)
    if os.environ.get("SPIRALFLOW_SEED"):
        seed = int(os.environ["SPIRALFLOW_SEED"])
    return ScenarioConfig(kind, params, grid, scheme, profiles.get("initial", ("zero", {})),
                          profiles.get("upper"), lv,
                          {k: v for (s, k), v in values.items() if s == "experiment"},
                          get("output", "dir", "out"), seed)


# --- output --------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _dt_summary(dts):
    if not dts:
        return {"steps": 0}
    a = np.asarray(dts)
    return {"steps": int(a.size), "dt_min": float(a.min()), "dt_max": float(a.max()),
            "dt_mean": float(a.mean())}


def _profile(spec):
    name, kw = spec
    return make_profile(name, **kw)


def _write_profiles(out: Path, snapshots, coord):
    col = "r" if coord == POLAR else "x"
    rows = ((s.t, x, u) for s in snapshots for x, u in zip(s.grid.nodes, s.values))
    _write_csv(out / "profiles.csv", ("t", col, "u"), rows)
    for k, s in enumerate(snapshots):
        pts = spiral_points(s).points
        _write_csv(out / f"spiral_t{k}.csv", ("x", "y"), pts)


def _meta(cfg: ScenarioConfig) -> dict:
    return {"kind": cfg.kind, "c": cfg.params.c, "r0": cfg.params.r0, "seed": cfg.seed,
            "grid": {"coord_kind": cfg.grid.coord_kind, "lo": cfg.grid.lo, "hi": cfg.grid.hi,
                     "n": cfg.grid.n, "h": cfg.grid.h},
            "scheme": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(cfg.scheme).items()},
            "initial": {"name": cfg.initial[0], **cfg.initial[1]}}


def _evolve(cfg: ScenarioConfig, out: Path) -> dict:
    traj = run(_profile(cfg.initial), cfg.grid, cfg.params, cfg.scheme)
    _write_profiles(out, traj.snapshots, cfg.grid.coord_kind)
    return {"dt": _dt_summary(traj.dt_history), "snapshots": len(traj.snapshots)}


def _evolve_levelset(cfg: ScenarioConfig, out: Path) -> dict:
    from .levelset import extract_zero_level, run_coupled

    a = cfg.levelset.get("a", 0.5)
    b = cfg.levelset.get("b", 4.0)
    n2d = cfg.levelset.get("n2d", 128)
    t_end = cfg.scheme.t_end
    marks = [t for t in cfg.scheme.record_times if 0 < t < t_end]
    res = run_coupled(_profile(cfg.initial), cfg.params, a, b, n2d, t_end, grid1d=cfg.grid,
                      cfg1d=cfg.scheme, record_times=marks)
    frames = res.snapshots + [(res.field, res.profile)]
    _write_profiles(out, [p for _, p in frames], POLAR)
    X, Y = res.field.mesh()
    for k, (f, _) in enumerate(frames):
        m = f.mask
        _write_csv(out / f"field_t{k}.csv", ("x", "y", "U"),
                   zip(X[m], Y[m], f.values[m]))
        try:
            pts = extract_zero_level(f).points
        except Exception:
            pts = np.empty((0, 2))
        _write_csv(out / f"levelset_t{k}.csv", ("x", "y"), pts)
    return {"steps_2d": res.steps, "h2d": res.field.h, "annulus": [a, b], "n2d": n2d}


def _experiment(cfg: ScenarioConfig):
    from . import verify as V
    from .barriers import mollify_initial
    from .pde import radial_heat_coeffs, spiral_coeffs

    name = cfg.kind.split(":", 1)[1]
    ex = cfg.experiment
    p = cfg.params
    init = _profile(cfg.initial)
    eps = ex.get("mollify_eps")
    if eps:
        init = mollify_initial(init, eps, p)
    if name == "comparison":
        if cfg.upper is None:
            raise V.SetupError("comparison needs an [upper] profile section")
        cs = SchemeConfig(**{**asdict(cfg.scheme), "boundary_far": "frozen_initial_slope",
                             "dt_policy": "uniform"})
        return V.comparison_experiment(init, _profile(cfg.upper), p, cs, cfg.grid)
    if name == "comparison_sweep":
        return V.comparison_sweep(ex.get("n_pairs", 20), seed=cfg.seed, grid=cfg.grid,
                                  t_end=cfg.scheme.t_end)
    if name == "gradient":
        return V.gradient_experiment(init, p, cfg.scheme, cfg.grid)
    if name == "time_regularity":
        return V.time_regularity_experiment(init, p, grid=cfg.grid)
    if name == "barrier_sandwich":
        return V.barrier_sandwich_experiment(init, p, cfg.grid, cfg.scheme.t_end)
    if name == "levelset":
        lv = cfg.levelset
        return V.levelset_experiment(init, p, lv.get("a", 0.5), lv.get("b", 4.0),
                                     lv.get("n2d", 256), cfg.scheme.t_end, cfg.grid)
    if name == "circle":
        return V.circle_experiment(ex.get("radius", 1.0), cfg.levelset.get("n2d", 256))
    if name == "cross_validation":
        return V.polar_log_cross_validation(init, p, t_end=cfg.scheme.t_end)
    if name == "chain_rule":
        return V.chain_rule_experiment(ex.get("samples", 10_000), cfg.seed)
    if name == "geometric_law":
        return V.geometric_law_experiment(ex.get("samples", 10_000), cfg.seed)
    if name == "far_field":
        return V.farfield_experiment(seed=cfg.seed)
    if name == "bs_assumptions":
        coeffs = (radial_heat_coeffs(ex.get("dimension", 3)) if ex.get("coeffs") == "radial_heat"
                  else spiral_coeffs(p))
        t0 = time.perf_counter()
        res = V.check_bs_assumptions(coeffs, ex.get("box", 10.0))
        return V.ExperimentReport("bs_assumptions", {"coeffs": coeffs.label}, res,
                                  res["passes"], time.perf_counter() - t0)
    if name == "psi_survey":
        t0 = time.perf_counter()
        res = V.psi_lower_bound_survey(ex.get("samples", 100_000), seed=cfg.seed)
        return V.ExperimentReport("psi_survey", {"samples": ex.get("samples", 100_000)}, res,
                                  res["passes"], time.perf_counter() - t0)
    raise ValueError(f"unknown experiment {name!r}")


def run_scenario(cfg: ScenarioConfig, out_dir: Optional[str] = None) -> int:
    """Run one scenario and write its files; returns the process exit status."""
    from .verify import SetupError

    out = Path(out_dir or cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=sys.stderr)
        return 1
    report = {"scheme": _meta(cfg)}
    status = 0
    try:
        if cfg.kind in ("evolve_polar", "evolve_log"):
            report["run"] = _evolve(cfg, out)
        elif cfg.kind == "evolve_levelset":
            report["run"] = _evolve_levelset(cfg, out)
        else:
            try:
                rep = _experiment(cfg)
                report["experiment"] = rep.to_dict()
                # wall-clock time would break byte-identical reruns
                runtime = report["experiment"].pop("runtime")
                print(f"{rep.name}: {runtime:.2f}s", file=sys.stderr)
                status = 0 if rep.passed else 2
            except SetupError as exc:
                report["experiment"] = {"name": cfg.kind, "passed": False,
                                        "setup_error": str(exc)}
                status = 2
    except (SolverError, ArithmeticError, ValueError, RuntimeError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        status = 1
    report["exit_status"] = status
    _write_json(out / "report.json", report)
    return status


def verify_all(jobs: int = 1, stream=None) -> int:
    from .verify import acceptance_suite

    stream = stream or sys.stdout
    suite = acceptance_suite()

    def one(item):
        cid, title, fn = item
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # reported as a failure line, not a crash
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        return cid, title, ok, detail, time.perf_counter() - t0

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(one, suite))
    for cid, title, ok, detail, dt in results:
        print(f"{'PASS' if ok else 'FAIL'} [{cid:>2}] {title}: {detail} ({dt:.1f}s)", file=stream)
    return 0 if all(r[2] for r in results) else 2


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="spiralflow")
    sub = ap.add_subparsers(dest="cmd", required=True)
    pr = sub.add_parser("run", help="run scenario configuration file(s)")
    pr.add_argument("configs", nargs="+")
    pr.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    pr.add_argument("--out", default=None)
    pr.add_argument("--jobs", type=int, default=1)
    pv = sub.add_parser("verify-all", help="run the acceptance suite")
    pv.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    if args.cmd == "verify-all":
        return verify_all(args.jobs)

    parsed = []
    for path in args.configs:
        try:
            text = Path(path).read_text(encoding="utf-8")
            parsed.append((path, parse_config(text, args.set)))
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return 1
        except ConfigError as exc:
            for e in exc.errors:
                print(f"{path}: {e}", file=sys.stderr)
            return 1

    def target(path, cfg):
        base = args.out or cfg.out_dir
        return base if len(parsed) == 1 else str(Path(base) / Path(path).stem)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        codes = list(pool.map(lambda pc: run_scenario(pc[1], target(*pc)), parsed))
    for (path, _), code in zip(parsed, codes):
        if len(parsed) > 1:
            print(f"{path}: exit {code}")
    if 1 in codes:
        return 1
    return 2 if 2 in codes else 0


if __name__ == "__main__":
    sys.exit(main())
