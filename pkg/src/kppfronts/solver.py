"""Semi-implicit finite-difference solver on a moving window.

One step of ``u_t = sigma(t) u_xx + f(t, u)`` is a Lie splitting: an explicit
reaction update followed by a weighted implicit diffusion solve with Dirichlet
ends. The reaction update is the exponential midpoint rule

    u_h   = u * exp(dt/2 * a(t + dt/2, u)),
    u_new = u * exp(dt   * a(t + dt/2, u_h)),      a = f(t, u)/u,

which is exact for the linear tail ``u_t = mu(t) u``, second order, and
monotone and range-preserving whenever ``dt * L <= 1/2`` for KPP terms with
nonincreasing ``f/u``. Diffusion uses weight ``w`` on the new level (``w = 1``
backward Euler, ``w = 1/2`` Crank-Nicolson); the scheme is monotone when
``2 (1 - w) sigma dt / dx^2 <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import lapack

from .model import DiffusivityProfile, KppNonlinearity

CLIP_EPS = 1e-12
FLUSH = 1e-300


class SolverError(RuntimeError):
    """Numerical failure inside a step (NaN, singular system)."""


class FrontLostError(SolverError):
    """The tracked front left the window."""


@dataclass(frozen=True)
class Grid1D:
    x_left: float
    dx: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("n_points must be at least 3")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @property
    def x_right(self) -> float:
        return self.x_left + (self.n_points - 1) * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n_points)

    @property
    def width(self) -> float:
        return (self.n_points - 1) * self.dx

    @classmethod
    def centered(cls, center: float, width: float, dx: float) -> "Grid1D":
        n = int(round(width / dx)) + 1
        return cls(center - 0.5 * (n - 1) * dx, dx, n)

    def shifted(self, k: int) -> "Grid1D":
        return Grid1D(self.x_left + k * self.dx, self.dx, self.n_points)


@dataclass(frozen=True)
class FieldState:
    time: float
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n_points,):
            raise ValueError("values must have one entry per grid point")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def at(self, x) -> np.ndarray:
        """Linear interpolation, constant extension beyond the window."""
        return np.interp(x, self.grid.x, self.values)

    def to_csv(self, path) -> None:
        data = np.column_stack([np.full(self.grid.n_points, self.time), self.grid.x, self.values])
        np.savetxt(path, data, delimiter=",", header="t,x,u", comments="", fmt="%.17g")


@dataclass(frozen=True)
class SchemeParams:
    """Step size, implicitness and window controls.

    ``lipschitz`` is the bound ``L_f`` checked against ``dt * L_f <= 1`` at
    construction; it is compared again with the nonlinearity's own bound when
    stepping. ``recenter_anchor`` is the window fraction where a recentred
    front is placed; with ``max_drift`` set, the window also follows the front
    as soon as it strays that far from the anchor, which keeps a fixed stretch
    of tail ahead of it.
    """

    dt: float = 0.01
    diffusion_weight: float = 1.0
    boundary_left: float = 1.0
    boundary_right: float = 0.0
    recenter_margin: float = 100.0
    recenter_anchor: float = 0.5
    max_drift: Optional[float] = None
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.5 <= self.diffusion_weight <= 1.0:
            raise ValueError("diffusion_weight must lie in [1/2, 1]")
        if not self.recenter_margin > 0:
            raise ValueError("recenter_margin must be positive")
        if not 0.0 < self.recenter_anchor < 1.0:
            raise ValueError("recenter_anchor must lie in (0, 1)")
        if self.max_drift is not None and not self.max_drift > 0:
            raise ValueError("max_drift must be positive")
        if self.lipschitz is not None and self.dt * self.lipschitz > 1.0:
            raise ValueError(f"dt * L_f = {self.dt * self.lipschitz:.3g} exceeds 1")


@dataclass
class FrontTrajectory:
    """Snapshots plus the per-step front positions of one evolution.

    ``times``/``X`` hold ``X(t)`` after every step (``NaN`` where the field
    has no crossing). ``extras`` carries named side products such as predicted
    positions or auxiliary trajectories.
    """

    snapshots: list
    times: np.ndarray
    X: np.ndarray
    level: float = 0.5
    metadata: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def positions(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.X.tolist()))

    def snapshot(self, t: float) -> FieldState:
        """Snapshot closest in time to ``t``."""
        if not self.snapshots:
            raise KeyError("trajectory holds no snapshots")
        ts = np.array([s.time for s in self.snapshots])
        return self.snapshots[int(np.argmin(np.abs(ts - t)))]

    @property
    def snapshot_times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def position(self, t: float) -> float:
        return float(np.interp(t, self.times, self.X))

    def oscillation_constant(self) -> float:
        """Smallest ``C`` with ``|X(t) - X(s)| <= C (|t - s| + 1)`` over unit-spaced
        pairs; equivalent up to a factor 2 to the full bound."""
        ok = np.isfinite(self.X)
        t, x = self.times[ok], self.X[ok]
        if t.size < 2:
            return 0.0
        grid = np.arange(t[0], t[-1] + 1e-12, 1.0)
        xs = np.interp(grid, t, x)
        return float(np.max(np.abs(np.diff(xs)) / 2.0)) if xs.size > 1 else 0.0

    def positions_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.times, self.X]), delimiter=",",
                   header="t,X", comments="", fmt="%.17g")


def rightmost_crossing(values: np.ndarray, x_left: float, dx: float, level: float) -> float:
    """Rightmost downward crossing of ``level``, linearly interpolated; NaN if none."""
    above = np.flatnonzero(values >= level)
    if above.size == 0:
        return math.nan
    k = int(above[-1])
    if k == values.size - 1:
        return math.nan
    u0, u1 = values[k], values[k + 1]
    frac = (u0 - level) / (u0 - u1) if u0 != u1 else 0.5
    return x_left + (k + frac) * dx


def _check_step_contract(f: KppNonlinearity, p: SchemeParams) -> None:
    if f.lipschitz is not None and p.dt * f.lipschitz > 1.0:
        raise ValueError(f"dt * L_f = {p.dt * f.lipschitz:.3g} exceeds 1 for this nonlinearity")


class _Stepper:
    """Array-level stepping with a cached tridiagonal factorisation."""

    def __init__(self, f: KppNonlinearity, d: Optional[DiffusivityProfile], p: SchemeParams,
                 grid: Grid1D):
        _check_step_contract(f, p)
        self.f, self.d, self.p = f, d, p
        self.n = grid.n_points
        self.dx = grid.dx
        self._key = None
        self._lu = None

    def _factor(self, r: float):
        key = r
        if key == self._key:
            return self._lu
        m = self.n - 2
        w = self.p.diffusion_weight
        dl = np.full(m - 1, -w * r)
        du = np.full(m - 1, -w * r)
        dd = np.full(m, 1.0 + 2.0 * w * r)
        dl, dd, du, du2, ipiv, info = lapack.dgttrf(dl, dd, du)
        if info != 0:
            raise SolverError(f"tridiagonal factorisation failed (info={info})")
        self._key, self._lu = key, (dl, dd, du, du2, ipiv)
        return self._lu

    def advance(self, t: float, u: np.ndarray, dt: float) -> np.ndarray:
        p = self.p
        th = t + 0.5 * dt
        f = self.f

        a0 = f.per_capita(th, u)
        uh = u * np.exp((0.5 * dt) * a0)
        a1 = f.per_capita(th, uh)
        us = u * np.exp(dt * a1)

        sigma = 1.0 if self.d is None else float(self.d.sigma(th))
        r = sigma * dt / (self.dx * self.dx)
        w = p.diffusion_weight
        bl, br = p.boundary_left, p.boundary_right
        us[0], us[-1] = bl, br
        rhs = us[1:-1].copy()
        if w < 1.0:
            rhs += (1.0 - w) * r * (us[:-2] - 2.0 * us[1:-1] + us[2:])
        rhs[0] += w * r * bl
        rhs[-1] += w * r * br
        dl, dd, du, du2, ipiv = self._factor(r)
        sol, info = lapack.dgttrs(dl, dd, du, du2, ipiv, rhs)
        if info != 0:
            raise SolverError(f"tridiagonal solve failed (info={info})")
        out = np.empty_like(u)
        out[0], out[-1] = bl, br
        out[1:-1] = sol
        if not np.all(np.isfinite(sol)):
            raise SolverError(f"non-finite values at t = {t + dt:.6g}")
        np.clip(out, 0.0, 1.0, out=out)
        out[out < FLUSH] = 0.0
        return out


def step(state: FieldState, f: KppNonlinearity, d: Optional[DiffusivityProfile],
         p: SchemeParams) -> FieldState:
    """Advance ``state`` by one step ``p.dt``."""
    st = _Stepper(f, d, p, state.grid)
    u = st.advance(state.time, np.array(state.values), p.dt)
    return FieldState(state.time + p.dt, state.grid, u)


def _shift_values(u: np.ndarray, k: int, left: float, right: float) -> np.ndarray:
    """Values on the window moved right by ``k`` cells."""
    out = np.empty_like(u)
    n = u.size
    if k == 0:
        out[:] = u
    elif k > 0:
        k = min(k, n)
        out[:n - k] = u[k:]
        out[n - k:] = right
    else:
        k = min(-k, n)
        out[k:] = u[:n - k]
        out[:k] = left
    return out


def recenter(state: FieldState, new_center: float, p: Optional[SchemeParams] = None,
             anchor: float = 0.5) -> FieldState:
    """Move the window so ``new_center`` sits at fraction ``anchor`` of it.

    The shift is snapped to a whole number of cells, so interior values are
    copied without interpolation; exposed cells take the adjacent boundary
    value.
    """
    p = p or SchemeParams()
    g = state.grid
    target = g.x_left + anchor * g.width
    k = int(round((new_center - target) / g.dx))
    u = _shift_values(np.asarray(state.values), k, p.boundary_left, p.boundary_right)
    return FieldState(state.time, g.shifted(k), u)


def evolve(initial: FieldState, f: KppNonlinearity, d: Optional[DiffusivityProfile],
           p: SchemeParams, t_end: float, observers: Sequence[Callable[[FieldState], None]] = (),
           snapshot_times: Optional[Iterable[float]] = None, level: float = 0.5,
           recentering: bool = True, metadata: Optional[dict] = None) -> FrontTrajectory:
    """Step from ``initial.time`` to ``t_end`` and collect a trajectory.

    The front position at ``level`` is recorded after every step. Snapshots
    are stored at the initial time, at the last step reaching each requested
    time, and at ``t_end``; every stored snapshot is passed to each observer.
    When ``recentering`` is on and the front comes within
    ``p.recenter_margin`` of either end, the window is moved so the front sits
    at ``p.recenter_anchor``.
    """
    t0 = float(initial.time)
    if t_end < t0:
        raise ValueError("t_end must not precede the initial time")
    dt = p.dt
    n_steps = int(math.ceil((t_end - t0) / dt - 1e-9))
    grid = initial.grid
    u = np.array(initial.values, dtype=float)
    stepper = _Stepper(f, d, p, grid)

    wanted = sorted(float(s) for s in (() if snapshot_times is None else snapshot_times)
                    if t0 < s <= t_end)
    snap_steps = {}
    for s in wanted:
        snap_steps.setdefault(min(n_steps, int(round((s - t0) / dt))), s)
    snap_steps[n_steps] = t_end

    snapshots = [initial]
    for obs in observers:
        obs(initial)
    times = np.empty(n_steps + 1)
    xs = np.empty(n_steps + 1)
    times[0] = t0
    xs[0] = rightmost_crossing(u, grid.x_left, grid.dx, level)
    margin_cells = p.recenter_margin / grid.dx
    drift_cells = math.inf if p.max_drift is None else p.max_drift / grid.dx
    t = t0
    for k in range(1, n_steps + 1):
        h = dt if k < n_steps else (t_end - (t0 + (n_steps - 1) * dt))
        if h <= 0:
            h = dt
        u = stepper.advance(t, u, h)
        t = t0 + k * dt if k < n_steps else t_end
        X = rightmost_crossing(u, grid.x_left, grid.dx, level)
        if recentering:
            if not math.isfinite(X):
                raise FrontLostError(
                    f"no crossing of {level} at t = {t:.4g}; window [{grid.x_left:.1f}, "
                    f"{grid.x_right:.1f}] too small")
            pos = (X - grid.x_left) / grid.dx
            anchor_pos = p.recenter_anchor * (grid.n_points - 1)
            if (pos < margin_cells or pos > grid.n_points - 1 - margin_cells
                    or abs(pos - anchor_pos) > drift_cells):
                target = grid.x_left + p.recenter_anchor * grid.width
                shift = int(round((X - target) / grid.dx))
                u = _shift_values(u, shift, p.boundary_left, p.boundary_right)
                grid = grid.shifted(shift)
                X = rightmost_crossing(u, grid.x_left, grid.dx, level)
                if not math.isfinite(X):
                    raise FrontLostError(f"front lost while recentring at t = {t:.4g}")
        times[k] = t
        xs[k] = X
        if k in snap_steps:
            s = FieldState(t, grid, u)
            snapshots.append(s)
            for obs in observers:
                obs(s)
    meta = dict(metadata or {})
    meta.setdefault("dt", dt)
    meta.setdefault("dx", grid.dx)
    meta.setdefault("diffusion_weight", p.diffusion_weight)
    return FrontTrajectory(snapshots, times, xs, level, meta)


def random_ordered_pair(rng: np.random.Generator, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Two nonincreasing fields ``lo <= hi`` from 1 at the left end to 0 at the right.

    Each candidate is either a random staircase (normalised cumulative sums of
    random increments) or a smoothed step at a random position; the pair is
    their pointwise min and max.
    """
    n = grid.n_points

    def candidate():
        if rng.random() < 0.5:
            inc = rng.random(n - 1) ** rng.uniform(1.0, 8.0)
            c = np.concatenate([[0.0], np.cumsum(inc)])
            return 1.0 - c / c[-1]
        x = grid.x
        x0 = rng.uniform(x[0], x[-1])
        w = rng.uniform(0.05, 5.0)
        v = 0.5 * (1.0 - np.tanh((x - x0) / w))
        v[0], v[-1] = 1.0, 0.0
        return v

    a, b = candidate(), candidate()
    return np.minimum(a, b), np.maximum(a, b)


def comparison_violation(f: KppNonlinearity, p: SchemeParams, grid: Grid1D, n_pairs: int = 50,
                         n_steps: int = 500, seed: int = 0,
                         d: Optional[DiffusivityProfile] = None, t0: float = 0.0) -> float:
    """Largest ``lo - hi`` seen while stepping random ordered pairs together."""
    rng = np.random.default_rng(seed)
    stepper = _Stepper(f, d, p, grid)
    worst = 0.0
    for _ in range(n_pairs):
        lo, hi = random_ordered_pair(rng, grid)
        t = t0
        for _ in range(n_steps):
            lo = stepper.advance(t, lo, p.dt)
            hi = stepper.advance(t, hi, p.dt)
            t += p.dt
            worst = max(worst, float(np.max(lo - hi)))
    return worst
