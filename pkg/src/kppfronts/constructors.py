"""Transition fronts built as Cauchy problems started at a finite time ``-T``.

Every recipe places its initial datum so the front sits at the window anchor,
evolves it with :func:`kppfronts.solver.evolve`, and records the expected
asymptotic speeds in ``trajectory.metadata``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from . import speedset
from .diagnostics import aligned_overlap
from .model import (DiffusivityProfile, HomogeneousKpp, KppNonlinearity, autonomous, mu_of_t,
                    time_change)
from .solver import FieldState, FrontTrajectory, Grid1D, SchemeParams, evolve
from .waves import AtomicMeasure, cached_profile, critical_speed, decay_constants, umu_envelopes

RECIPES = ("Supercritical", "Glued", "Critical", "BcSegment", "TwoSpeedHomogeneous", "Spreading")


class GluingError(ValueError):
    """The two glued initial data do not cross inside the window."""


@dataclass(frozen=True)
class RunParams:
    """Discretisation and recording controls shared by all recipes.

    ``scheme`` defaults to a window that keeps the front at a quarter of its
    width and follows it within ``max_drift``, so a long stretch of tail stays
    ahead of the front. Snapshots are stored every ``snapshot_every`` time
    units from ``snapshot_from`` on, plus any ``snapshot_times``.
    """

    dx: float = 0.05
    width: float = 600.0
    scheme: SchemeParams = field(default_factory=lambda: SchemeParams(
        dt=0.01, recenter_anchor=0.25, max_drift=10.0))
    snapshot_every: Optional[float] = 5.0
    snapshot_from: Optional[float] = None
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if not self.width > 20 * self.dx:
            raise ValueError("width must span more than 20 cells")

    def grid_at(self, x_front: float) -> Grid1D:
        n = int(round(self.width / self.dx)) + 1
        x_left = x_front - self.scheme.recenter_anchor * (n - 1) * self.dx
        # snap so that x = 0 is a node, keeping separate runs aligned
        x_left = self.dx * round(x_left / self.dx)
        return Grid1D(x_left, self.dx, n)

    def times(self, t0: float, t1: float) -> list[float]:
        out = set(float(s) for s in self.snapshot_times if t0 <= s <= t1)
        if self.snapshot_every:
            start = t0 if self.snapshot_from is None else max(t0, self.snapshot_from)
            k0 = math.ceil((start - 1e-9) / self.snapshot_every)
            k1 = math.floor((t1 + 1e-9) / self.snapshot_every)
            out.update(k * self.snapshot_every for k in range(k0, k1 + 1))
        return sorted(out)

    def refined(self, factor: int = 2) -> "RunParams":
        return replace(self, dx=self.dx / factor,
                       scheme=replace(self.scheme, dt=self.scheme.dt / factor))


@dataclass(frozen=True)
class ConstructionSpec:
    recipe: str
    params: dict
    T: float
    run: RunParams = field(default_factory=RunParams)

    def __post_init__(self):
        if self.recipe not in RECIPES:
            raise ValueError(f"unknown recipe {self.recipe!r}; expected one of {RECIPES}")
        if not self.T > 0:
            raise ValueError("T must be positive")


def _predicted_positions(times: np.ndarray, rate: Callable[[float], float], t_start: float,
                         x_start: float) -> np.ndarray:
    """``x_start + int_{t_start}^t rate`` on ``times`` (trapezoid on the step grid)."""
    r = np.array([rate(t) for t in times])
    cum = integrate.cumulative_trapezoid(r, times, initial=0.0)
    return x_start + cum - np.interp(t_start, times, cum)


def _position_integral(rate: Callable[[float], float], t: float) -> float:
    """``int_0^t rate``."""
    val, _ = integrate.quad(rate, 0.0, t, limit=400, epsabs=1e-11, epsrel=1e-11)
    return val


def _tail_datum(grid: Grid1D, kappa: float, x0: float) -> np.ndarray:
    return np.minimum(np.exp(-kappa * (grid.x - x0)), 1.0)


def _evolve_from(f, d, run: RunParams, u0: np.ndarray, grid: Grid1D, t0: float, t1: float,
                 recentering: bool = True, scheme: Optional[SchemeParams] = None,
                 metadata: Optional[dict] = None) -> FrontTrajectory:
    return evolve(FieldState(t0, grid, u0), f, d, scheme or run.scheme, t1,
                  snapshot_times=run.times(t0, t1), recentering=recentering, metadata=metadata)


def _concat(a: FrontTrajectory, b: FrontTrajectory) -> FrontTrajectory:
    """``b`` continues ``a`` from its final state."""
    snaps = list(a.snapshots) + list(b.snapshots[1:])
    meta = dict(a.metadata)
    meta.update(b.metadata)
    return FrontTrajectory(snaps, np.concatenate([a.times, b.times[1:]]),
                           np.concatenate([a.X, b.X[1:]]), a.level, meta)


def _kappa_bound(f: KppNonlinearity, d: Optional[DiffusivityProfile]) -> tuple[float, float]:
    if d is None:
        return f.mu_minus, f.mu_plus
    return f.mu_minus / d.sigma_minus, f.mu_plus / d.sigma_plus


def supercritical_front(f: KppNonlinearity, kappa: float, T: float = 60.0,
                        run: Optional[RunParams] = None, d: Optional[DiffusivityProfile] = None,
                        extended: bool = False) -> FrontTrajectory:
    """Front with tail ``exp(-kappa x)`` started from ``min(exp(-kappa (x - x_T)), 1)``.

    The predicted position is ``X(t) = int_0^t (kappa sigma + mu/kappa)``
    (``sigma = 1`` without diffusivity) and ``x_T = X(-T)``; it is stored in
    ``extras['X_pred']`` on the trajectory times.

    Raises
    ------
    ValueError
        If ``kappa`` is outside ``(0, sqrt(min(mu_-, mu_+)))`` (limits of the
        time-changed problem when a diffusivity is given).
    """
    run = run or RunParams()
    mm, mp = _kappa_bound(f, d)
    if not extended and not 0.0 < kappa < math.sqrt(min(mm, mp)):
        raise ValueError(f"kappa = {kappa} outside (0, sqrt(min(mu_-, mu_+))) = "
                         f"(0, {math.sqrt(min(mm, mp)):.6g})")
    if not T > 0:
        raise ValueError("T must be positive")
    sigma = (lambda t: 1.0) if d is None else d.sigma

    def rate(t):
        return kappa * sigma(t) + mu_of_t(f, t) / kappa

    x_T = _position_integral(rate, -T)
    grid = run.grid_at(x_T)
    u0 = _tail_datum(grid, kappa, x_T)
    speeds = speedset.physical_speeds(kappa, kappa, f.mu_minus, f.mu_plus,
                                      1.0 if d is None else d.sigma_minus,
                                      1.0 if d is None else d.sigma_plus)
    meta = {"recipe": "Supercritical", "kappa": kappa, "T": T, "x_T": x_T,
            "expected_c_minus": speeds.c_minus, "expected_c_plus": speeds.c_plus}
    traj = _evolve_from(f, d, run, u0, grid, -T, T, metadata=meta)
    traj.extras["X_pred"] = _predicted_positions(traj.times, rate, -T, x_T)
    traj.extras["kappa"] = kappa
    return traj


def bc_front(f: KppNonlinearity, kappa_minus: float, T: float = 60.0,
             run: Optional[RunParams] = None) -> FrontTrajectory:
    """Front with ``kappa in [sqrt(mu_+), sqrt(mu_-))`` when ``mu_+ < mu_-``.

    Past speed ``kappa + mu_-/kappa``; the future speed is the minimal one,
    ``2 sqrt(mu_+)``.
    """
    mm, mp = f.mu_minus, f.mu_plus
    if not mp < mm:
        raise ValueError("the (B, C] segment requires mu_+ < mu_-")
    if not math.sqrt(mp) <= kappa_minus < math.sqrt(mm):
        raise ValueError(f"kappa_minus must lie in [sqrt(mu_+), sqrt(mu_-)) = "
                         f"[{math.sqrt(mp):.6g}, {math.sqrt(mm):.6g})")
    traj = supercritical_front(f, kappa_minus, T, run, extended=True)
    traj.metadata.update(recipe="BcSegment", expected_c_plus=2.0 * math.sqrt(mp),
                         future_model="LogCorrected")
    return traj


def glued_front(f: KppNonlinearity, kappa_minus: float, kappa_plus: float, T: float = 60.0,
                run: Optional[RunParams] = None, auxiliary: bool = True) -> FrontTrajectory:
    """Front with past decay ``kappa_minus`` and future decay ``kappa_plus``.

    ``u1`` is the ``kappa_minus`` front of ``f(-|t|, u)`` and ``u2`` the
    ``kappa_plus`` front of ``f``; the run starts from ``max(u1, u2)`` at
    ``-T``. For ``t <= 0`` the window stays fixed and ``u1``, ``u2`` are evolved
    alongside; ``extras['sandwich_violation']`` is the largest breach of
    ``max(u1, u2) <= u <= min(u1 + u2, 1)`` over the shared snapshots.
    """
    run = run or RunParams()
    mm, mp = f.mu_minus, f.mu_plus
    km, kp = kappa_minus, kappa_plus
    if abs(km - kp) <= 1e-14 * km:
        traj = supercritical_front(f, km, T, run)
        traj.metadata.update(recipe="Glued", kappa_minus=km, kappa_plus=kp)
        return traj
    if not (0.0 < kp < km < math.sqrt(mm) and kp < math.sqrt(mp)):
        raise ValueError("glued fronts need 0 < kappa_plus < kappa_minus < sqrt(mu_-) and "
                         "kappa_plus < sqrt(mu_+)")
    if not T > 0:
        raise ValueError("T must be positive")
    fs = f.symmetrized()

    def rate1(t):
        return km + mu_of_t(f, -abs(t)) / km

    def rate2(t):
        return kp + mu_of_t(f, t) / kp

    x1, x2 = _position_integral(rate1, -T), _position_integral(rate2, -T)
    # tails cross where exp(-km (x - x1)) = exp(-kp (x - x2))
    x_cross = (km * x1 - kp * x2) / (km - kp)
    grid = run.grid_at(x1)
    if not grid.x_left < x_cross < grid.x_right:
        raise GluingError(f"initial data cross at x = {x_cross:.2f}, outside the window "
                          f"[{grid.x_left:.2f}, {grid.x_right:.2f}]")
    if x_cross < x1 + math.log(2.0) / km:
        raise GluingError("u2 dominates at the half level; the gluing is degenerate")
    a = _tail_datum(grid, km, x1)
    b = _tail_datum(grid, kp, x2)
    u0 = np.maximum(a, b)
    cm = km + mm / km
    cp = kp + mp / kp
    meta = {"recipe": "Glued", "kappa_minus": km, "kappa_plus": kp, "T": T,
            "expected_c_minus": cm, "expected_c_plus": cp, "x_cross": x_cross}
    fixed = replace(run.scheme, max_drift=None)
    past = _evolve_from(f, None, run, u0, grid, -T, 0.0, recentering=False, scheme=fixed,
                        metadata=meta)
    if not np.isfinite(past.X).all() or past.snapshots[-1].grid.x_right - past.X[-1] \
            < run.scheme.recenter_margin:
        raise GluingError("window too small to follow the front up to t = 0 without recentring")
    last = past.snapshots[-1]
    fut = _evolve_from(f, None, run, np.array(last.values), last.grid, 0.0, T, metadata=meta)
    traj = _concat(past, fut)
    traj.extras["X1"] = _predicted_positions(traj.times, rate1, -T, x1)
    traj.extras["X2"] = _predicted_positions(traj.times, rate2, -T, x2)
    if auxiliary:
        u1 = _evolve_from(fs, None, run, a, grid, -T, 0.0, recentering=False, scheme=fixed)
        u2 = _evolve_from(f, None, run, b, grid, -T, 0.0, recentering=False, scheme=fixed)
        worst = 0.0
        for su, s1, s2 in zip(past.snapshots, u1.snapshots, u2.snapshots):
            _, uu, v1 = aligned_overlap(su, s1)
            _, _, v2 = aligned_overlap(su, s2)
            lo = np.maximum(v1, v2)
            hi = np.minimum(v1 + v2, 1.0)
            worst = max(worst, float(np.max(lo - uu)), float(np.max(uu - hi)))
        traj.extras["u1"] = u1
        traj.extras["u2"] = u2
        traj.extras["sandwich_violation"] = max(worst, 0.0)
    return traj


def heaviside(grid: Grid1D, x0: float) -> np.ndarray:
    """``1_{x < x0}`` with a one-cell linear ramp centred at ``x0``."""
    return np.clip((x0 - grid.x) / grid.dx + 0.5, 0.0, 1.0)


def critical_speeds(mu_minus: float, mu_plus: float) -> tuple[float, float]:
    """Past and future speeds of the critical front."""
    sm = math.sqrt(mu_minus)
    cm = 2.0 * sm
    cp = 2.0 * math.sqrt(mu_plus) if mu_minus >= mu_plus else sm + mu_plus / sm
    return cm, cp


def critical_front(f: KppNonlinearity, T: float = 60.0, run: Optional[RunParams] = None,
                   t_end: Optional[float] = None) -> FrontTrajectory:
    """Front emerging from a step ``1_{x < x_T}`` at ``-T``, evolved to ``t_end``
    (default ``T``)."""
    run = run or RunParams()
    if not T > 0:
        raise ValueError("T must be positive")
    t_end = T if t_end is None else t_end
    grid = run.grid_at(0.0)
    u0 = heaviside(grid, 0.0)
    cm, cp = critical_speeds(f.mu_minus, f.mu_plus)
    meta = {"recipe": "Critical", "T": T, "t_end": t_end, "expected_c_minus": cm,
            "expected_c_plus": cp, "past_model": "LogCorrected",
            "future_model": "LogCorrected" if f.mu_minus >= f.mu_plus else "Linear"}
    return _evolve_from(f, None, run, u0, grid, -T, t_end, metadata=meta)


def spreading_front(f: KppNonlinearity, horizon: float = 200.0, width: float = 10.0,
                    run: Optional[RunParams] = None) -> FrontTrajectory:
    """Solution from the indicator of ``[-width/2, width/2]`` at ``t = 0``.

    Both ends are held at 0 and the window is centred on the datum; the
    rightmost crossing of 1/2 is tracked.
    """
    run = run or RunParams(width=1000.0, scheme=SchemeParams(
        dt=0.01, boundary_left=0.0, recenter_margin=50.0, recenter_anchor=0.5))
    n = int(round(run.width / run.dx)) + 1
    grid = Grid1D(-0.5 * (n - 1) * run.dx, run.dx, n)
    u0 = np.clip(np.minimum((0.5 * width - grid.x), (grid.x + 0.5 * width)) / grid.dx + 0.5,
                 0.0, 1.0)
    meta = {"recipe": "Spreading", "horizon": horizon, "expected_c_plus": 2.0 * math.sqrt(
        f.mu_plus)}
    return _evolve_from(f, None, run, u0, grid, 0.0, horizon, metadata=meta)


def two_speed_homogeneous(g: HomogeneousKpp, c1: float, c2: float, T: float = 60.0,
                          run: Optional[RunParams] = None, masses: tuple[float, float] = (1.0, 1.0)
                          ) -> FrontTrajectory:
    """Front of ``u_t = u_xx + g(u)`` moving like ``phi_{c1}`` in the past and
    ``phi_{c2}`` in the future.

    Starts from ``max_i phi_{c_i}(x + c_i T - s_i)``, with ``s_i`` the tail
    offsets of the atomic measure ``m_1 delta_{c1} + m_2 delta_{c2}``, so the
    datum matches the ``u_mu`` envelopes at ``-T``. The lower envelope at
    ``-T`` (a convex combination of fronts, hence a subsolution for concave
    ``g``) is folded into the max, which keeps the run above it afterwards.
    """
    run = run or RunParams()
    cstar = critical_speed(g.mu0)
    if not cstar * (1 - 1e-12) <= c1 < c2:
        raise ValueError("need 2 sqrt(g'(0)) <= c1 < c2")
    measure = AtomicMeasure(((c1, masses[0]), (c2, masses[1])))
    crit, sup, M = measure.split(cstar)
    offsets = measure.tail_offsets(g.mu0)
    p1, p2 = cached_profile(g, c1), cached_profile(g, c2)
    s1 = offsets.get(c1, -c1 * math.log(max(crit, 1e-300)))
    s2 = offsets[c2]
    z1, z2 = -c1 * T + s1, -c2 * T + s2       # front coordinates at -T
    x_half = z1 + p1.half_level_xi
    grid = run.grid_at(x_half)
    x = grid.x
    a = p1(x - z1)
    b = p2(x - z2)
    diff = a - b
    sign_change = np.flatnonzero((diff[:-1] > 0) & (diff[1:] <= 0))
    if sign_change.size == 0:
        raise GluingError("the two profiles do not cross inside the window")
    lower, _ = umu_envelopes(measure, {c1: p1, c2: p2}, g, -T, x)
    u0 = np.maximum(np.maximum(a, b), lower)
    f = autonomous(g)
    meta = {"recipe": "TwoSpeedHomogeneous", "c1": c1, "c2": c2, "T": T,
            "expected_c_minus": c1, "expected_c_plus": c2, "masses": tuple(masses),
            "x_cross": float(x[sign_change[0]])}
    traj = _evolve_from(f, None, run, u0, grid, -T, T, metadata=meta)
    traj.extras["measure"] = measure
    traj.extras["profiles"] = {c1: p1, c2: p2}
    return traj


def build(spec: ConstructionSpec, f=None, d: Optional[DiffusivityProfile] = None
          ) -> FrontTrajectory:
    """Dispatch a :class:`ConstructionSpec` to its recipe."""
    p = dict(spec.params)
    if spec.recipe == "Supercritical":
        return supercritical_front(f, p["kappa"], spec.T, spec.run, d)
    if spec.recipe == "Glued":
        return glued_front(f, p["kappa_minus"], p["kappa_plus"], spec.T, spec.run)
    if spec.recipe == "Critical":
        return critical_front(f, spec.T, spec.run, p.get("t_end"))
    if spec.recipe == "BcSegment":
        return bc_front(f, p["kappa_minus"], spec.T, spec.run)
    if spec.recipe == "TwoSpeedHomogeneous":
        return two_speed_homogeneous(f, p["c1"], p["c2"], spec.T, spec.run,
                                     tuple(p.get("masses", (1.0, 1.0))))
    if spec.recipe == "Spreading":
        return spreading_front(f, p.get("horizon", spec.T), p.get("width", 10.0), spec.run)
    raise ValueError(spec.recipe)


def sandwich_pair(f: KppNonlinearity, kappa: float, T: float = 60.0,
                  run: Optional[RunParams] = None, t_end: Optional[float] = None
                  ) -> tuple[FrontTrajectory, FrontTrajectory]:
    """``u`` under ``f`` and ``v`` under the autonomous limit ``f_-`` from the same
    datum ``min(exp(-kappa (x - x_T)), 1)`` at ``-T``, on one fixed window."""
    run = run or RunParams()
    t_end = T if t_end is None else t_end
    if not 0.0 < kappa < math.sqrt(min(f.mu_minus, f.mu_plus)):
        raise ValueError("kappa outside (0, sqrt(min(mu_-, mu_+)))")

    def rate(t):
        return kappa + mu_of_t(f, t) / kappa

    x_T = _position_integral(rate, -T)
    grid = run.grid_at(x_T)
    u0 = _tail_datum(grid, kappa, x_T)
    fixed = replace(run.scheme, max_drift=None)
    fm = autonomous(f.minus)
    meta = {"recipe": "Sandwich", "kappa": kappa, "T": T}
    u = _evolve_from(f, None, run, u0, grid, -T, t_end, recentering=False, scheme=fixed,
                     metadata=meta)
    v = _evolve_from(fm, None, run, u0, grid, -T, t_end, recentering=False, scheme=fixed,
                     metadata=dict(meta, companion="f_minus"))
    if grid.x_right - np.nanmax(u.X) < run.scheme.recenter_margin:
        raise ValueError("window too small for the fixed-window sandwich run")
    return u, v
