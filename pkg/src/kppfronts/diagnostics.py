"""Measurements on trajectories: positions, speeds, tail decay, distances to
traveling profiles and comparison inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import ThetaEnvelope
from .solver import FieldState, FrontTrajectory, rightmost_crossing
from .waves import WaveProfile

LINEAR = "Linear"
LOG_CORRECTED = "LogCorrected"
MODELS = (LINEAR, LOG_CORRECTED)
DECAY_RANGE = (1e-10, 0.05)
ROUNDOFF_FLOOR = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

__all__ = [
    "FrontTrajectory", "SpeedEstimate", "DecayEstimate", "WidthReport", "NoCrossingError",
    "locate_front", "interface_width", "estimate_speed", "global_mean_speed_profile",
    "estimate_decay", "decay_window", "profile_distance", "sandwich_check",
    "exp_lower_bound_check", "past_window", "future_window",
]


class NoCrossingError(ValueError):
    """The field does not cross the requested level."""


@dataclass(frozen=True)
class SpeedEstimate:
    value: float
    window: tuple[float, float]
    model: str
    residual_rms: float
    slope_ci: float
    n_points: int
    log_coefficient: Optional[float] = None


@dataclass(frozen=True)
class DecayEstimate:
    lambda_hat: float
    window: tuple[float, float]
    r_squared: float
    u_range: tuple[float, float]
    critical_flag: bool = False


@dataclass(frozen=True)
class WidthReport:
    width: float
    degenerate: bool

    def __float__(self) -> float:
        return self.width


def past_window(T: float) -> tuple[float, float]:
    return (-5.0 * T / 6.0, -T / 3.0)


def future_window(T: float) -> tuple[float, float]:
    return (T / 3.0, 5.0 * T / 6.0)


def locate_front(s: FieldState, level: float = 0.5) -> float:
    """Rightmost crossing of ``level``, linear between bracketing grid points."""
    v = np.asarray(s.values)
    X = rightmost_crossing(v, s.grid.x_left, s.grid.dx, level)
    if not math.isfinite(X):
        raise NoCrossingError(f"field does not cross level {level}")
    return X


def interface_width(s: FieldState, a: float, b: float) -> WidthReport:
    """Diameter of ``{x : a <= u(x) <= b}`` for the piecewise-linear field.

    The set of the interpolant is the union over cells of the sub-intervals
    where the linear piece lies in ``[a, b]``. A set touching both window
    ends is flagged degenerate (it may extend beyond the window).
    """
    if not 0.0 < a <= b < 1.0:
        raise ValueError("need 0 < a <= b < 1")
    u = np.asarray(s.values)
    x = s.grid.x
    dx = s.grid.dx
    inside = (u >= a) & (u <= b)
    lo_candidates = []
    hi_candidates = []
    if inside.any():
        idx = np.flatnonzero(inside)
        lo_candidates.append(x[idx[0]])
        hi_candidates.append(x[idx[-1]])
    # cells where the linear piece passes through [a, b] without a node inside
    u0, u1 = u[:-1], u[1:]
    lo_v, hi_v = np.minimum(u0, u1), np.maximum(u0, u1)
    through = (hi_v >= a) & (lo_v <= b) & (u0 != u1)
    if through.any():
        k = np.flatnonzero(through)
        ta = (a - u0[k]) / (u1[k] - u0[k])
        tb = (b - u0[k]) / (u1[k] - u0[k])
        t_lo = np.clip(np.minimum(ta, tb), 0.0, 1.0)
        t_hi = np.clip(np.maximum(ta, tb), 0.0, 1.0)
        lo_candidates.append(float(np.min(x[k] + t_lo * dx)))
        hi_candidates.append(float(np.max(x[k] + t_hi * dx)))
    if not lo_candidates:
        return WidthReport(0.0, False)
    lo, hi = min(lo_candidates), max(hi_candidates)
    degenerate = bool(inside[0] and inside[-1])
    return WidthReport(float(hi - lo), degenerate)


def _design(t: np.ndarray, model: str) -> np.ndarray:
    if model == LINEAR:
        return np.column_stack([t, np.ones_like(t)])
    if model == LOG_CORRECTED:
        return np.column_stack([t, np.log(np.abs(t)), np.ones_like(t)])
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def fit_speed(t: np.ndarray, X: np.ndarray, model: str = LINEAR, n_boot: int = 200,
              seed: int = 0) -> SpeedEstimate:
    """Least-squares speed fit on raw arrays (see :func:`estimate_speed`)."""
    t = np.asarray(t, dtype=float)
    X = np.asarray(X, dtype=float)
    ok = np.isfinite(X)
    t, X = t[ok], X[ok]
    if t.size < 10:
        raise ValueError(f"need at least 10 positions in the window, got {t.size}")
    if model == LOG_CORRECTED and t[0] <= 0.0 <= t[-1]:
        raise ValueError("LogCorrected fit needs a window not containing t = 0")
    A = _design(t, model)
    coef, *_ = np.linalg.lstsq(A, X, rcond=None)
    resid = X - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    rng = np.random.default_rng(seed)
    fitted = A @ coef
    slopes = np.empty(n_boot)
    for i in range(n_boot):
        Xb = fitted + rng.choice(resid, size=resid.size, replace=True)
        slopes[i] = np.linalg.lstsq(A, Xb, rcond=None)[0][0]
    ci = float(0.5 * (np.percentile(slopes, 97.5) - np.percentile(slopes, 2.5))) if n_boot else 0.0
    return SpeedEstimate(float(coef[0]), (float(t[0]), float(t[-1])), model, rms, ci, int(t.size),
                         float(coef[1]) if model == LOG_CORRECTED else None)


def estimate_speed(traj: FrontTrajectory, window: tuple[float, float], model: str = LINEAR,
                   n_boot: int = 200, seed: int = 0, stride: Optional[int] = None
                   ) -> SpeedEstimate:
    """Fit ``X(t) = c t + b`` (Linear) or ``X(t) = c t + k ln|t| + b``
    (LogCorrected) on ``window`` and return ``c``.

    The bootstrap resamples residuals ``n_boot`` times with a seeded
    generator; ``slope_ci`` is half the central 95% range of the slopes.
    ``stride`` thins the per-step positions (default: about 2000 points).
    """
    ta, tb = window
    if not ta < tb:
        raise ValueError("window must satisfy t_a < t_b")
    m = (traj.times >= ta - 1e-9) & (traj.times <= tb + 1e-9)
    t, X = traj.times[m], traj.X[m]
    if stride is None:
        stride = max(1, t.size // 2000)
    return fit_speed(t[::stride], X[::stride], model, n_boot, seed)


def global_mean_speed_profile(traj: FrontTrajectory, tau: float, window: Optional[
        tuple[float, float]] = None) -> tuple[float, float, float]:
    """``(sup_dev, inf_dev, gamma_hat)`` of the increments
    ``(X(t + tau) - X(t))/tau``: their mean and the largest excursions above
    and below it."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    ok = np.isfinite(traj.X)
    t, X = traj.times[ok], traj.X[ok]
    if window is not None:
        m = (t >= window[0]) & (t <= window[1])
        t, X = t[m], X[m]
    if t.size < 2 or t[-1] - t[0] < 3.0 * tau:
        raise ValueError("trajectory must span at least 3 tau")
    start = t[t <= t[-1] - tau]
    inc = (np.interp(start + tau, t, X) - np.interp(start, t, X)) / tau
    gamma = float(np.mean(inc))
    return float(np.max(inc) - gamma), float(gamma - np.min(inc)), gamma


def decay_window(s: FieldState, X: float, u_range: tuple[float, float] = (1e-8, 1e-3)
                 ) -> tuple[float, float]:
    """Offsets ``(d1, d2)`` beyond ``X`` where the field first falls into ``u_range``."""
    x = s.grid.x
    u = np.asarray(s.values)
    right = x > X
    hi = np.flatnonzero(right & (u <= u_range[1]))
    lo = np.flatnonzero(right & (u < u_range[0]))
    if hi.size == 0:
        raise ValueError("field never falls below the upper end of the decay range")
    x1 = x[hi[0]]
    x2 = x[lo[0] - 1] if lo.size else x[-1]
    if x2 <= x1:
        raise ValueError("decay range not resolved on the window")
    return float(x1 - X), float(x2 - X)


def estimate_decay(s: FieldState, X: float, offset_window: Optional[tuple[float, float]] = None,
                   critical_flag: bool = False) -> DecayEstimate:
    """Least-squares slope of ``-ln u`` against ``x`` on ``[X + d1, X + d2]``.

    Without a window the default tail regime ``u in [1e-8, 1e-3]`` is used.

    Raises
    ------
    ValueError
        If values on the window leave ``[1e-10, 0.05]``.
    """
    if offset_window is None:
        offset_window = decay_window(s, X)
    d1, d2 = offset_window
    x = s.grid.x
    m = (x >= X + d1 - 1e-12) & (x <= X + d2 + 1e-12)
    u = np.asarray(s.values)[m]
    xs = x[m]
    if xs.size < 3:
        raise ValueError("decay window holds fewer than 3 grid points")
    umin, umax = float(u.min()), float(u.max())
    if umin < DECAY_RANGE[0] or umax > DECAY_RANGE[1]:
        raise ValueError(f"window leaves the tail regime: u in [{umin:.3e}, {umax:.3e}]")
    y = -np.log(u)
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayEstimate(float(coef[0]), (float(d1), float(d2)), r2, (umin, umax), critical_flag)


def _golden_min(fun, a: float, b: float, tol: float) -> tuple[float, float]:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    xm = 0.5 * (a + b)
    return xm, fun(xm)


def profile_distance(s: FieldState, X: float, p: WaveProfile, half_width: float = 30.0,
                     search: float = 10.0, tol: float = 1e-6) -> tuple[float, float]:
    """Sup-distance between the field seen from ``X`` and ``p``, minimised over shifts.

    The profile is re-centred on its half level, so ``best_shift`` is the
    offset of the field's best-matching translate relative to ``X``:
    ``max_x |u(X + shift + x) - phi(phi^{-1}(1/2) + x)|`` for ``|x| <= half_width``.
    The shift is found by golden-section search on ``[-search, search]``.
    """
    g = s.grid
    if X - half_width - search < g.x_left or X + half_width + search > g.x_right:
        raise ValueError("comparison window exceeds the snapshot bounds")
    n = int(round(2 * half_width / g.dx)) + 1
    xs = np.linspace(-half_width, half_width, n)
    ref = p(p.half_level_xi + xs)
    xg, u = g.x, np.asarray(s.values)

    def dist(shift):
        return float(np.max(np.abs(np.interp(X + shift + xs, xg, u) - ref)))

    # coarse scan guards against a poor bracket, then golden refinement
    grid = np.linspace(-search, search, 81)
    vals = [dist(v) for v in grid]
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]
    shift, d = _golden_min(dist, a, b, tol)
    return d, shift


def _shared_pairs(u_traj: FrontTrajectory, v_traj: FrontTrajectory):
    if len(u_traj.snapshots) != len(v_traj.snapshots):
        raise ValueError("trajectories hold different numbers of snapshots")
    for su, sv in zip(u_traj.snapshots, v_traj.snapshots):
        if abs(su.time - sv.time) > 1e-9:
            raise ValueError(f"snapshot times differ: {su.time} vs {sv.time}")
        if abs(su.grid.dx - sv.grid.dx) > 1e-12:
            raise ValueError("grids have different spacing")
        off = (sv.grid.x_left - su.grid.x_left) / su.grid.dx
        k = int(round(off))
        if abs(off - k) > 1e-6:
            raise ValueError("grids are not aligned")
        yield su, sv, k


def aligned_overlap(a: FieldState, b: FieldState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values of ``a`` and ``b`` on the common nodes of two aligned grids."""
    k = int(round((b.grid.x_left - a.grid.x_left) / a.grid.dx))
    na, nb = a.grid.n_points, b.grid.n_points
    lo, hi = max(0, k), min(na, k + nb)
    if hi <= lo:
        raise ValueError("grids do not overlap")
    return a.grid.x[lo:hi], np.asarray(a.values)[lo:hi], np.asarray(b.values)[lo - k:hi - k]


def sandwich_check(u_traj: FrontTrajectory, v_traj: FrontTrajectory, env: ThetaEnvelope,
                   mu_minus: float, theta_scale: float = 1.0) -> float:
    """Largest violation of ``u e^{-mu_- Theta} <= v <= u e^{mu_- Theta}``.

    ``theta_scale`` multiplies Theta (values below 1 deliberately weaken the
    bound for falsification runs).
    """
    worst = 0.0
    for su, sv, _ in _shared_pairs(u_traj, v_traj):
        _, u, v = aligned_overlap(su, sv)
        th = theta_scale * env(su.time)
        lower = u * math.exp(-mu_minus * th)
        upper = u * math.exp(mu_minus * th)
        worst = max(worst, float(np.max(lower - v)), float(np.max(v - upper)))
    return max(worst, 0.0)


@dataclass(frozen=True)
class ExpBoundReport:
    infimum: float
    argmin: float
    decreasing_trend: bool

    def __float__(self):
        return self.infimum


def exp_lower_bound_check(s: FieldState, X: float, lam: float,
                          floor: float = ROUNDOFF_FLOOR) -> ExpBoundReport:
    """``inf_{x > X, u >= floor} e^{lam (x - X)} u(x)``.

    ``decreasing_trend`` flags a weighted tail still falling at the end of
    the valid range (the infimum is then not bounded away from zero on this
    window).
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    x = s.grid.x
    u = np.asarray(s.values)
    m = (x > X) & (u >= floor)
    if not m.any():
        return ExpBoundReport(0.0, float("nan"), True)
    xs = x[m]
    w = np.exp(lam * (xs - X)) * u[m]
    k = int(np.argmin(w))
    n_tail = max(3, xs.size // 10)
    trend = bool(np.polyfit(xs[-n_tail:], np.log(w[-n_tail:]), 1)[0] < 0) if xs.size >= 3 else False
    return ExpBoundReport(float(w[k]), float(xs[k]), trend)
