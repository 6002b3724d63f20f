"""Experiment runner: ``kppfronts simulate|suite|wave|region|validate|presets``.

Each scenario writes an archive directory::

    config.toml       verbatim copy of the configuration
    positions.csv     t,X
    snapshots/<t>.csv t,x,u
    diagnostics.csv   diagnostic,metric,value (deterministic given config and seed)
    verdicts.csv      criterion,name,value,target,passed
    timings.csv       stage,seconds
    xt.svg            X(t) plot (region.svg for region scenarios)
    summary.txt       human-readable summary

The exit status is 0 exactly when every verdict passes.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import constructors as C
from . import diagnostics as D
from . import model, speedset, waves
from .config import (ConfigError, ExperimentConfig, build_diffusivity, build_homogeneous,
                     build_nonlinearity, build_run, load_config, load_suite, parse_config,
                     preset_names)
from .solver import Grid1D, SchemeParams, comparison_violation
from .svg import Plot


@dataclass(frozen=True)
class Verdict:
    criterion: str
    name: str
    value: float
    target: str
    passed: bool


@dataclass
class RunArchive:
    name: str
    verdicts: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    outdir: Optional[Path] = None
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(v.passed for v in self.verdicts)

    def summary(self) -> str:
        lines = [f"scenario {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for v in self.verdicts:
            lines.append(f"  [{'pass' if v.passed else 'FAIL'}] {v.criterion:<6s} {v.name:<28s} "
                         f"{v.value:.6g}  ({v.target})")
        if self.error:
            lines.append(f"  error: {self.error}")
        total = sum(self.timings.values())
        lines.append(f"  wall time {total:.1f} s")
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def judge(d: dict, value: float) -> tuple[bool, str]:
    """Verdict of ``value`` against the tolerance keys of a diagnostic table."""
    if not math.isfinite(value):
        return False, "finite value"
    if "expect" in d:
        e = float(d["expect"])
        if "rel_tol" in d:
            tol = float(d["rel_tol"])
            return abs(value - e) <= tol * abs(e), f"{e:g} +- {100 * tol:g}%"
        tol = float(d.get("abs_tol", 0.0))
        return abs(value - e) <= tol, f"{e:g} +- {tol:g}"
    if "range" in d:
        lo, hi = map(float, d["range"])
        return lo <= value <= hi, f"in [{lo:g}, {hi:g}]"
    if "max" in d:
        return value < float(d["max"]), f"< {float(d['max']):g}"
    if "min" in d:
        return value > float(d["min"]), f"> {float(d['min']):g}"
    return True, "report only"


class _Scenario:
    """Lazily built objects and cached reruns of one configuration."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.recipe = cfg.recipe_name
        self.T = float(cfg.recipe.get("T", 60.0))
        self.f = None if self.recipe in ("Speedset", "Region", "Comparison") \
            else build_nonlinearity(cfg)
        self.d = build_diffusivity(cfg)
        self._runs = {}

    def run(self, refine: int = 1, T: Optional[float] = None):
        T = self.T if T is None else T
        key = (refine, T)
        if key not in self._runs:
            self._runs[key] = self._build(refine, T)
        return self._runs[key]

    def _build(self, refine: int, T: float):
        cfg, r = self.cfg, self.cfg.recipe
        run = build_run(cfg, refine)
        name = self.recipe
        if name == "Supercritical":
            return C.supercritical_front(self.f, float(r["kappa"]), T, run, self.d)
        if name == "Glued":
            return C.glued_front(self.f, float(r["kappa_minus"]), float(r["kappa_plus"]), T, run)
        if name == "Critical":
            t_end = r.get("t_end")
            return C.critical_front(self.f, T, run, None if t_end is None else float(t_end))
        if name == "BcSegment":
            return C.bc_front(self.f, float(r["kappa_minus"]), T, run)
        if name == "TwoSpeedHomogeneous":
            return C.two_speed_homogeneous(build_homogeneous(cfg), float(r["c1"]), float(r["c2"]),
                                           T, run, tuple(r.get("masses", (1.0, 1.0))))
        if name == "Spreading":
            return C.spreading_front(self.f, float(r.get("horizon", T)),
                                     float(r.get("width", 10.0)), run)
        if name == "Sandwich":
            return C.sandwich_pair(self.f, float(r["kappa"]), T, run,
                                   float(r.get("t_end", T)))
        raise ConfigError(f"recipe.name: {name!r} does not produce a trajectory")

    @property
    def traj(self):
        t = self.run()
        return t[0] if isinstance(t, tuple) else t


def _speed_model(traj, d: dict, which: str) -> str:
    return d.get("model", traj.metadata.get(f"{which}_model", D.LINEAR))


def _speeds_for(sc: _Scenario, traj, windows, models, seed):
    return [D.estimate_speed(traj, tuple(w), m, seed=seed).value for w, m in zip(windows, models)]


def _default_windows(sc: _Scenario, d: dict):
    if "windows" in d:
        ws = [tuple(map(float, w)) for w in d["windows"]]
    else:
        ws = [D.past_window(sc.T), D.future_window(sc.T)]
        if sc.recipe == "Spreading":
            ws = [(sc.T / 4.0, sc.T)]
    models = d.get("models")
    if models is None:
        tr = sc.traj
        models = [tr.metadata.get("past_model", D.LINEAR) if w[1] <= 0 else
                  tr.metadata.get("future_model", D.LINEAR) for w in ws]
    return ws, list(models)


def _diag_speedset_sweep(d: dict, seed: int):
    pairs = d.get("mu_pairs", [[1, 1], [1, 4], [4, 1]])
    n = int(d.get("n", 200))
    rng = np.random.default_rng(seed)
    worst_rt, accel_bad, total = 0.0, 0, 0
    for mm, mp in pairs:
        for dp in speedset.sample_K(mm, mp, n, rng):
            sp = speedset.speeds_from_decays(dp, mm, mp)
            adm = speedset.admissible(sp, mm, mp)
            total += 1
            if not adm:
                worst_rt = math.inf
                continue
            w = adm.witness
            worst_rt = max(worst_rt, abs(w.kappa_minus - dp.kappa_minus),
                           abs(w.kappa_plus - dp.kappa_plus))
            if mp >= mm and not (sp.c_plus >= sp.c_minus * (1 - 1e-12)):
                accel_bad += 1
            if mp > mm and not sp.c_plus > sp.c_minus:
                accel_bad += 1
    return {"round_trip_error": worst_rt, "acceleration_failures": float(accel_bad),
            "pairs": float(total)}


def speedset_example_failures() -> int:
    """Number of failed reference cases of the closed-form layer."""
    bad = 0
    cases = [
        (speedset.SpeedPair(2.5, 2.4), 1.0, 1.0, False),
        (speedset.SpeedPair(1.2 + 4 / 1.2, 2.0), 4.0, 1.0, True),
        (speedset.SpeedPair(2.0, 4.5), 1.0, 4.0, False),
    ]
    for p, mm, mp, want in cases:
        if bool(speedset.admissible(p, mm, mp)) != want:
            bad += 1
    w = speedset.admissible(speedset.SpeedPair(1.2 + 4 / 1.2, 2.0), 4.0, 1.0).witness
    if w is None or abs(w.kappa_plus - 1.0) > 1e-12:
        bad += 1
    for c, mm, mp, k, cp in [(2, 1, 1, 1, 2), (2, 1, 4, 1, 5), (4, 4, 1, 1, 2)]:
        if abs(speedset.kappa_from_cminus(c, mm, mp) - k) > 1e-12 or \
                abs(speedset.min_future_speed(c, mm, mp) - cp) > 1e-12:
            bad += 1
    return bad


def _sample_steepness(traj, prof: waves.WaveProfile, n: int, seed: int, t_range, x_half: float):
    rng = np.random.default_rng(seed)
    snaps = [s for s in traj.snapshots if t_range[0] <= s.time <= t_range[1]]
    if not snaps:
        raise ValueError("no snapshots in the steepness time range")
    worst = 0.0
    lo_v, hi_v = float(prof.phi[-1]), float(prof.phi[0])
    for _ in range(n):
        s = snaps[int(rng.integers(len(snaps)))]
        X = D.locate_front(s)
        y = X + rng.uniform(-8.0, 8.0)
        xs = s.grid.x
        u = np.asarray(s.values)
        anchor = float(np.interp(y, xs, u))
        if not lo_v < anchor < hi_v:
            continue
        off = rng.uniform(-x_half, x_half, 64)
        off = np.concatenate([off, [0.0]])
        ok = (y + off > xs[0]) & (y + off < xs[-1])
        off = off[ok]
        env = waves.steepness_envelope(prof, anchor, off)
        val = np.interp(y + off, xs, u)
        left = off <= 0
        worst = max(worst, float(np.max(np.where(left, env - val, val - env), initial=0.0)))
    return worst


def _diag_umu(traj, g: model.HomogeneousKpp, stride: int = 1) -> float:
    measure = traj.extras["measure"]
    profiles = traj.extras["profiles"]
    worst = 0.0
    for s in traj.snapshots[::stride]:
        lo, hi = waves.umu_envelopes(measure, profiles, g, s.time, s.grid.x)
        u = np.asarray(s.values)
        # the datum itself is only known to lie between the envelopes up to
        # the finite-start error; the comparison is made on the whole window
        worst = max(worst, float(np.max(lo - u)), float(np.max(u - np.minimum(hi, 1.0))))
    return max(worst, 0.0)


def run_diagnostic(sc: _Scenario, d: dict, seed: int) -> dict:
    """Evaluate one diagnostic table; returns ``{metric: value}`` with the
    judged metric under ``'value'``."""
    kind = d["kind"]
    if kind == "speedset_sweep":
        out = _diag_speedset_sweep(d, seed)
        out["value"] = max(out["round_trip_error"], out["acceleration_failures"])
        return out
    if kind == "speedset_examples":
        return {"value": float(speedset_example_failures())}
    if kind == "comparison":
        f = build_nonlinearity(sc.cfg)
        run = build_run(sc.cfg)
        width = float(d.get("width", 40.0))
        n = int(round(width / run.dx)) + 1
        p = replace(run.scheme, boundary_left=1.0, boundary_right=0.0)
        v = comparison_violation(f, p, Grid1D(-0.5 * width, run.dx, n),
                                 int(d.get("n_pairs", 50)), int(d.get("n_steps", 500)), seed,
                                 t0=float(d.get("t0", -2.5)))
        return {"value": v}

    if sc.recipe == "Sandwich":
        u, v = sc.run()
        if kind != "sandwich":
            raise ConfigError(f"diagnostic {kind!r} not available for Sandwich runs")
        zeta = sc.f.zeta_minus
        env = model.theta_envelope(zeta, [s.time for s in u.snapshots])
        val = D.sandwich_check(u, v, env, sc.f.mu_minus, float(d.get("theta_scale", 1.0)))
        return {"value": val, "theta_final": env.values[-1]}

    traj = sc.traj
    if kind == "speed":
        est = D.estimate_speed(traj, tuple(d["window"]), d.get("model", D.LINEAR), seed=seed)
        return {"value": est.value, "residual_rms": est.residual_rms, "ci": est.slope_ci}
    if kind == "nr1_speed":
        est = D.estimate_speed(traj, tuple(d["window"]), d.get("model", D.LINEAR), seed=seed)
        cm = float(d.get("c_minus", traj.metadata.get("expected_c_minus")))
        pred = speedset.nr1_future_speed(cm, sc.f.mu_minus, sc.f.mu_plus)
        return {"value": est.value, "predicted": pred}
    if kind == "pointwise_speed":
        step = float(d.get("step", 1.0))
        excl = tuple(d.get("exclude", [-10.0, 10.0]))
        t = traj.times
        grid = np.arange(t[0] + 10.0, t[-1] - step, step)
        grid = grid[(grid + step < excl[0]) | (grid > excl[1])]
        Xm = np.interp(grid + step, t, traj.X) - np.interp(grid, t, traj.X)
        Xp = np.interp(grid + step, t, traj.extras["X_pred"]) - np.interp(grid, t, traj.extras["X_pred"])
        return {"value": float(np.max(np.abs(Xm - Xp)) / step)}
    if kind == "position_ratio":
        t = float(d["t"])
        return {"value": traj.position(t) / t}
    if kind == "decay":
        times = [float(v) for v in d["times"]]
        vals = {}
        worst = None
        expect = float(d.get("expect", traj.extras.get("kappa", math.nan)))
        for t in times:
            s = traj.snapshot(t)
            est = D.estimate_decay(s, D.locate_front(s))
            vals[f"lambda_t{t:g}"] = est.lambda_hat
            if worst is None or abs(est.lambda_hat - expect) > abs(worst - expect):
                worst = est.lambda_hat
        vals["value"] = worst
        return vals
    if kind == "tail_normalization":
        lo, hi = d.get("x_range", [10.0, 25.0])
        worst_lo, worst_hi = math.inf, -math.inf
        kappa = traj.extras["kappa"]
        for t in d.get("times", [0.0, 20.0, 40.0]):
            s = traj.snapshot(float(t))
            Xp = float(np.interp(s.time, traj.times, traj.extras["X_pred"]))
            xs = np.linspace(lo, hi, 31)
            r = s.at(Xp + xs) * np.exp(kappa * xs)
            worst_lo, worst_hi = min(worst_lo, r.min()), max(worst_hi, r.max())
        far = worst_lo if abs(worst_lo - 1) > abs(worst_hi - 1) else worst_hi
        return {"value": float(far), "min_ratio": float(worst_lo), "max_ratio": float(worst_hi)}
    if kind == "profile_distance":
        t = float(d["t"])
        if "mu0" in d:
            g = model.homogeneous(float(d["mu0"]), float(d.get("b", 0.0)))
        else:
            g = model.homogeneous(sc.f.mu_plus, float(sc.cfg.nonlinearity.get("b", 0.0)))
        p = waves.cached_profile(g, float(d["c"]))
        s = traj.snapshot(t)
        dist, shift = D.profile_distance(s, D.locate_front(s), p)
        return {"value": dist, "best_shift": shift}
    if kind == "steepness":
        g = build_homogeneous(sc.cfg)
        prof = waves.cached_profile(g, float(d["gamma"]))
        t_range = d.get("t_range", [-0.8 * sc.T, 0.8 * sc.T])
        v = _sample_steepness(traj, prof, int(d.get("n_samples", 20)), seed, t_range,
                              float(d.get("x_half", 20.0)))
        return {"value": v}
    if kind == "umu":
        return {"value": _diag_umu(traj, build_homogeneous(sc.cfg), int(d.get("stride", 1)))}
    if kind == "global_mean":
        win = d.get("window")
        sup_dev, inf_dev, gamma = D.global_mean_speed_profile(
            traj, float(d["tau"]), None if win is None else tuple(win))
        return {"value": max(sup_dev, inf_dev), "sup_dev": sup_dev, "inf_dev": inf_dev,
                "gamma_hat": gamma}
    if kind == "interface_width":
        a, b = float(d.get("a", 0.05)), float(d.get("b", 0.95))
        w = max(D.interface_width(s, a, b).width for s in traj.snapshots[1:])
        return {"value": w}
    if kind == "monotone":
        v = max(float(np.max(np.diff(np.asarray(s.values)))) for s in traj.snapshots)
        return {"value": max(v, 0.0)}
    if kind == "exp_lower_bound":
        lam = float(d.get("lambda_factor", 1.1)) * math.sqrt(sc.f.mu_minus)
        vals = [D.exp_lower_bound_check(traj.snapshot(float(t)), traj.position(float(t)), lam).infimum
                for t in d["times"]]
        return {"value": float(min(vals))}
    if kind == "glued_sandwich":
        return {"value": float(traj.extras["sandwich_violation"])}
    if kind == "acceleration":
        ws, models = _default_windows(sc, d)
        cm, cp = _speeds_for(sc, traj, ws[:2], models[:2], seed)
        return {"value": cp - cm, "c_minus": cm, "c_plus": cp}
    if kind in ("refinement", "start_time"):
        ws, models = _default_windows(sc, d)
        base = _speeds_for(sc, traj, ws, models, seed)
        other = sc.run(refine=2) if kind == "refinement" else sc.run(T=2.0 * sc.T)
        if isinstance(other, tuple):
            other = other[0]
        alt = _speeds_for(sc, other, ws, models, seed)
        out = {}
        worst = 0.0
        for w, a, b in zip(ws, base, alt):
            rel = abs(b - a) / abs(a)
            out[f"speed[{w[0]:g},{w[1]:g}]"] = a
            out[f"speed_alt[{w[0]:g},{w[1]:g}]"] = b
            worst = max(worst, rel)
        out["value"] = worst
        return out
    raise ConfigError(f"diagnostics.kind: {kind!r} not supported for recipe {sc.recipe}")


def _region_outputs(cfg: ExperimentConfig, outdir: Optional[Path]):
    r = cfg.recipe
    mm, mp = float(r.get("mu_minus", 1.0)), float(r.get("mu_plus", 1.0))
    reg = speedset.region_sample(mm, mp, int(r.get("resolution", 100)))
    if outdir is not None:
        write_region(reg, outdir)
    return reg


def write_region(reg: speedset.Region, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    reg.to_csv(outdir / "region_K.csv", outdir / "region_speeds.csv")
    left = Plot(title=f"K for mu- = {reg.mu_minus:g}, mu+ = {reg.mu_plus:g}",
                xlabel="kappa-", ylabel="kappa+", width=520, height=480)
    left.polygon(reg.kappa_boundary[:, 0], reg.kappa_boundary[:, 1], label="K")
    for name, (a, b) in reg.marks.items():
        left.point(a, b, name)
    left.save(outdir / "region.svg")
    right = Plot(title="admissible (c-, c+)", xlabel="c-", ylabel="c+", width=520, height=480)
    sp = reg.speed_boundary
    right.line(sp[:, 0], sp[:, 1], label="image of the boundary of K")
    right.save(outdir / "region_speeds.svg")


def _write_trajectory(traj, outdir: Path, max_snapshots: int = 40) -> None:
    traj.positions_csv(outdir / "positions.csv")
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    snaps = traj.snapshots
    if len(snaps) > max_snapshots:
        idx = np.unique(np.linspace(0, len(snaps) - 1, max_snapshots).round().astype(int))
        snaps = [snaps[i] for i in idx]
    for s in snaps:
        s.to_csv(snapdir / f"{s.time:.4f}.csv")
    plot = Plot(title="front position", xlabel="t", ylabel="X(t)")
    step = max(1, traj.times.size // 2000)
    plot.line(traj.times[::step], traj.X[::step], label="measured")
    if "X_pred" in traj.extras:
        plot.line(traj.times[::step], traj.extras["X_pred"][::step], label="predicted", dash="4,3")
    plot.save(outdir / "xt.svg")


def run_scenario(cfg: ExperimentConfig, outdir: Optional[Path] = None) -> RunArchive:
    """Execute a configuration, evaluate its diagnostics and write the archive."""
    arch = RunArchive(cfg.name)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "config.toml").write_text(cfg.raw)
        arch.outdir = outdir
    sc = _Scenario(cfg)
    try:
        t0 = time.perf_counter()
        if sc.recipe == "Region":
            _region_outputs(cfg, outdir)
        elif sc.recipe not in ("Speedset", "Comparison"):
            res = sc.run()
            if outdir is not None:
                _write_trajectory(res[0] if isinstance(res, tuple) else res, outdir)
        arch.timings["recipe"] = time.perf_counter() - t0
        for i, d in enumerate(cfg.diagnostics):
            t1 = time.perf_counter()
            name = d.get("name", f"{d['kind']}-{i}")
            vals = run_diagnostic(sc, d, cfg.seed)
            for k in sorted(vals):
                arch.rows.append((name, k, vals[k]))
            spec = d if "expect" in d or "predicted" not in vals else dict(d, expect=vals["predicted"])
            ok, target = judge(spec, float(vals["value"]))
            arch.verdicts.append(Verdict(d.get("criterion", "-"), name, float(vals["value"]),
                                         target, ok))
            arch.timings[f"diagnostic:{name}"] = time.perf_counter() - t1
        sens = cfg.sensitivity
        if sc.recipe not in ("Speedset", "Comparison", "Region") and sc.recipe != "Sandwich":
            for kind in ("start_time", "refinement"):
                if sens.get(kind, True) and not any(d["kind"] == kind for d in cfg.diagnostics):
                    t1 = time.perf_counter()
                    vals = run_diagnostic(sc, {"kind": kind}, cfg.seed)
                    for k in sorted(vals):
                        arch.rows.append((f"sensitivity:{kind}", k, vals[k]))
                    arch.timings[f"sensitivity:{kind}"] = time.perf_counter() - t1
                elif not sens.get(kind, True):
                    arch.rows.append((f"sensitivity:{kind}", "skipped",
                                      sens.get(f"{kind}_reason", "disabled in config")))
    except Exception as exc:  # archive what we have, then report
        arch.error = f"{type(exc).__name__}: {exc}"
        if outdir is not None:
            (outdir / "error.txt").write_text(traceback.format_exc())
    if outdir is not None:
        _write_archive(arch, outdir)
    return arch


def _write_archive(arch: RunArchive, outdir: Path) -> None:
    with open(outdir / "diagnostics.csv", "w") as fh:
        fh.write("diagnostic,metric,value\n")
        for name, metric, value in arch.rows:
            fh.write(f"{name},{metric},{_fmt(value)}\n")
    with open(outdir / "verdicts.csv", "w") as fh:
        fh.write("criterion,name,value,target,passed\n")
        for v in arch.verdicts:
            fh.write(f"{v.criterion},{v.name},{_fmt(v.value)},\"{v.target}\",{v.passed}\n")
    with open(outdir / "timings.csv", "w") as fh:
        fh.write("stage,seconds\n")
        for k, v in arch.timings.items():
            fh.write(f"{k},{v:.3f}\n")
    (outdir / "summary.txt").write_text(arch.summary() + "\n")


def _suite_worker(args):
    path, outroot = args
    t0 = time.perf_counter()
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        return (Path(path).stem, False, 0.0, f"config error: {exc}", [])
    out = None if outroot is None else Path(outroot) / cfg.name
    arch = run_scenario(cfg, out)
    crits = sorted({v.criterion for v in arch.verdicts})
    return (cfg.name, arch.passed, time.perf_counter() - t0, arch.error or "", crits)


def run_suite(paths, jobs: int = 1, outroot: Optional[Path] = None):
    """Run scenarios with at most ``jobs`` worker processes.

    Returns ``(rows, all_passed, seconds)``; a failing scenario does not stop
    the others.
    """
    if jobs < 1:
        raise ValueError("jobs must be positive")
    t0 = time.perf_counter()
    tasks = [(str(p), None if outroot is None else str(outroot)) for p in paths]
    if jobs == 1 or len(tasks) <= 1:
        rows = [_suite_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_suite_worker, tasks))
    return rows, all(r[1] for r in rows), time.perf_counter() - t0


def format_suite(rows, seconds: float) -> str:
    lines = [f"{'scenario':<34s} {'result':<6s} {'seconds':>8s}  criteria"]
    for name, ok, secs, err, crits in rows:
        extra = f"  {err}" if err else ""
        lines.append(f"{name:<34s} {'PASS' if ok else 'FAIL':<6s} {secs:8.1f}  "
                     f"{','.join(crits)}{extra}")
    n_ok = sum(1 for r in rows if r[1])
    lines.append(f"{n_ok}/{len(rows)} scenarios passed in {seconds:.1f} s")
    return "\n".join(lines)


def _cmd_simulate(a) -> int:
    cfg = load_config(a.config)
    out = Path(a.output or cfg.output or Path("runs") / cfg.name)
    arch = run_scenario(cfg, out)
    print(arch.summary())
    print(f"archive written to {out}")
    return 0 if arch.passed else 1


def _cmd_suite(a) -> int:
    paths = load_suite(a.suite)
    rows, ok, secs = run_suite(paths, a.jobs, Path(a.output) if a.output else Path("runs"))
    print(format_suite(rows, secs))
    return 0 if ok else 1


def _cmd_wave(a) -> int:
    if a.family == "logistic":
        g = model.homogeneous(a.mu)
    elif a.family == "concave":
        g = model.homogeneous(a.mu, a.b)
    else:
        raise ConfigError(f"--family: unknown family {a.family!r}")
    p = waves.compute_profile(g, a.c, None if a.xi_range is None else tuple(a.xi_range), a.dxi)
    out = Path(a.output or f"wave_c{a.c:g}.csv")
    p.to_csv(out)
    print(f"c = {p.speed:g}, lambda_c = {p.lambda_c:.10g}, critical = {p.critical_flag}, "
          f"residual = {p.residual:.2e}, half-level xi = {p.half_level_xi:.6f}")
    print(f"profile written to {out}")
    return 0


def _cmd_region(a) -> int:
    reg = speedset.region_sample(a.mu_minus, a.mu_plus, a.resolution)
    out = Path(a.output or "region")
    write_region(reg, out)
    for name, pt in reg.marks.items():
        print(f"{name}: kappa = ({pt[0]:.6g}, {pt[1]:.6g})")
    print(f"region written to {out / 'region.svg'}")
    return 0


def _cmd_validate(a) -> int:
    cfg = load_config(a.config)
    print(f"configuration {cfg.name}: valid")
    if cfg.recipe_name not in ("Speedset", "Region", "Comparison"):
        f = build_nonlinearity(cfg)
        rep = model.validate_kpp(f)
        print(rep.summary())
        return 0 if rep.passed else 1
    return 0


def _cmd_presets(a) -> int:
    for name in preset_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kppfronts", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("config", help="config file or preset name")
    s.add_argument("-o", "--output", help="archive directory")
    s.set_defaults(func=_cmd_simulate)
    s = sub.add_parser("suite", help="run a list of scenarios")
    s.add_argument("suite", help="suite file (scenarios = [...]) or preset suite name")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("-o", "--output", help="root directory for the archives")
    s.set_defaults(func=_cmd_suite)
    s = sub.add_parser("wave", help="compute a traveling-wave profile")
    s.add_argument("--family", default="logistic", choices=("logistic", "concave"))
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--mu", type=float, default=1.0)
    s.add_argument("--b", type=float, default=0.0)
    s.add_argument("--dxi", type=float, default=0.01)
    s.add_argument("--xi-range", type=float, nargs=2)
    s.add_argument("-o", "--output")
    s.set_defaults(func=_cmd_wave)
    s = sub.add_parser("region", help="draw the admissible decay and speed sets")
    s.add_argument("--mu-minus", type=float, required=True)
    s.add_argument("--mu-plus", type=float, required=True)
    s.add_argument("--resolution", type=int, default=100)
    s.add_argument("-o", "--output")
    s.set_defaults(func=_cmd_region)
    s = sub.add_parser("validate", help="check a configuration and its nonlinearity")
    s.add_argument("config")
    s.set_defaults(func=_cmd_validate)
    s = sub.add_parser("presets", help="list the shipped presets")
    s.set_defaults(func=_cmd_presets)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.func(a)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
