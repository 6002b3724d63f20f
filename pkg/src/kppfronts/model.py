"""Time-dependent KPP reaction terms, diffusivities and their envelopes.

A reaction term is a :class:`KppNonlinearity`: a vectorised handle
``eval(t, u)`` together with its limiting profiles ``f_minus``/``f_plus`` as
``t -> -inf``/``+inf``, the slopes ``mu_minus``/``mu_plus`` of those limits at
``u = 0`` and optional convergence envelopes.

The built-in family is separable, ``f(t, u) = m(t) * shape(u)``, where the time
factor is a :class:`TimeProfile` (constant, tanh ramp, piecewise flat with a
smooth join, or a decaying bump) and the shape is the logistic ``u(1-u)`` or
the concave ``u(1-u)(1+bu)`` with ``b`` in ``(-1, 0]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

ArrayLike = np.ndarray | float
Reaction = Callable[[float, ArrayLike], ArrayLike]
Profile = Callable[[ArrayLike], ArrayLike]

DEFAULT_T_SAMPLES = (-50.0, -20.0, -5.0, 0.0, 5.0, 20.0, 50.0)
DEFAULT_U_SAMPLES = tuple(np.geomspace(1e-6, 1.0, 51))
FD_STEP = 1e-7


class HypothesisError(ValueError):
    """Raised when an input violates a standing hypothesis on f or sigma."""


class IntegrabilityError(ValueError):
    """Raised when an envelope cannot be integrated down to -infinity."""


@dataclass(frozen=True)
class HomogeneousKpp:
    """Time-independent KPP term ``g`` with ``g'(0) = mu0``.

    ``key`` identifies the term for caching (family name and parameters).
    """

    g: Profile
    mu0: float
    key: tuple
    dg1: Optional[float] = None

    def __call__(self, u):
        return self.g(u)

    def slope_at_one(self) -> float:
        if self.dg1 is not None:
            return self.dg1
        h = 1e-6
        return float((self.g(1.0) - self.g(1.0 - h)) / h)


@dataclass(frozen=True)
class KppNonlinearity:
    """A reaction term ``f(t, u)`` of monostable KPP type.

    ``eval`` must accept a scalar time and a scalar or array ``u``. The
    optional ``mu`` (closed form of ``d_u f(t, 0)``) and ``rate`` (closed form of
    ``f(t, u)/u``) bypass finite differences and divisions by small ``u``.
    ``lipschitz`` bounds ``|d_u f|`` and is what the solver's step-size
    contract is checked against.
    """

    eval: Reaction
    f_minus: Profile
    f_plus: Profile
    mu_minus: float
    mu_plus: float
    zeta_minus: Optional[Callable[[float], float]] = None
    zeta_plus: Optional[Callable[[float], float]] = None
    kpp_constants: tuple[float, float, float] = (1.0, 1.0, 1.0)
    mu: Optional[Callable[[float], float]] = None
    rate: Optional[Reaction] = None
    lipschitz: Optional[float] = None
    key: tuple = ("custom",)
    limit_keys: tuple = (("custom-minus",), ("custom-plus",))

    def __post_init__(self):
        if not (self.mu_minus > 0 and self.mu_plus > 0):
            raise HypothesisError("mu_minus and mu_plus must be positive")

    def __call__(self, t, u):
        return self.eval(t, u)

    def per_capita(self, t: float, u: np.ndarray) -> np.ndarray:
        """``f(t, u)/u``, continued by ``d_u f(t, 0)`` at ``u = 0``."""
        u = np.asarray(u, dtype=float)
        if self.rate is not None:
            return np.asarray(self.rate(t, u), dtype=float)
        out = np.empty_like(u)
        small = u <= 1e-300
        out[~small] = self.eval(t, u[~small]) / u[~small]
        if small.any():
            out[small] = mu_of_t(self, t)
        return out

    @property
    def minus(self) -> HomogeneousKpp:
        return HomogeneousKpp(self.f_minus, self.mu_minus, self.limit_keys[0])

    @property
    def plus(self) -> HomogeneousKpp:
        return HomogeneousKpp(self.f_plus, self.mu_plus, self.limit_keys[1])

    def symmetrized(self) -> "KppNonlinearity":
        """The term ``f(-|t|, u)``, whose limits at both ends are ``f_minus``."""
        f = self

        def ev(t, u):
            return f.eval(-abs(t), u)

        rate = None if f.rate is None else (lambda t, u: f.rate(-abs(t), u))
        mu = None if f.mu is None else (lambda t: f.mu(-abs(t)))
        zm = None if f.zeta_minus is None else (lambda t: f.zeta_minus(-abs(t)))
        return replace(
            f, eval=ev, f_plus=f.f_minus, mu_plus=f.mu_minus, zeta_minus=zm,
            zeta_plus=zm, mu=mu, rate=rate, key=("symmetrized",) + f.key,
            limit_keys=(f.limit_keys[0], f.limit_keys[0]),
        )


# ---------------------------------------------------------------------------
# separable family

@dataclass(frozen=True)
class TimeProfile:
    """Positive time factor ``m(t)`` with limits ``lim_minus``/``lim_plus``."""

    fn: Callable[[float], float]
    lim_minus: float
    lim_plus: float
    sup: float
    key: tuple

    def __call__(self, t):
        return self.fn(t)


def constant_profile(value: float) -> TimeProfile:
    value = float(value)
    return TimeProfile(lambda t: value + 0.0 * np.asarray(t, dtype=float),
                       value, value, value, ("constant", value))


def tanh_profile(minus: float, plus: float, width: float = 1.0,
                 center: float = 0.0) -> TimeProfile:
    """``m(t) = (m- + m+)/2 + (m+ - m-)/2 * tanh((t - center)/width)``."""
    mid, half = 0.5 * (minus + plus), 0.5 * (plus - minus)

    def fn(t):
        return mid + half * np.tanh((np.asarray(t, dtype=float) - center) / width)

    return TimeProfile(fn, float(minus), float(plus), max(minus, plus),
                       ("tanh", minus, plus, width, center))


def flat_profile(minus: float, plus: float, t_start: float = -1.0,
                 t_stop: float = 1.0) -> TimeProfile:
    """Flat at ``minus`` before ``t_start``, flat at ``plus`` after ``t_stop``,
    joined by a C^1 smoothstep."""
    if not t_stop > t_start:
        raise ValueError("t_stop must exceed t_start")

    def fn(t):
        s = np.clip((np.asarray(t, dtype=float) - t_start) / (t_stop - t_start), 0.0, 1.0)
        return minus + (plus - minus) * s * s * (3.0 - 2.0 * s)

    return TimeProfile(fn, float(minus), float(plus), max(minus, plus),
                       ("flat", minus, plus, t_start, t_stop))


def bump_profile(base: float, amplitude: float, rate: float = 1.0) -> TimeProfile:
    """``m(t) = base * (1 + amplitude * exp(-rate |t|))``; same limit both ends."""
    if base <= 0 or amplitude <= -1:
        raise ValueError("bump profile must stay positive")

    def fn(t):
        return base * (1.0 + amplitude * np.exp(-rate * np.abs(np.asarray(t, dtype=float))))

    return TimeProfile(fn, float(base), float(base), base * (1 + max(amplitude, 0.0)),
                       ("bump", base, amplitude, rate))


def _shape(b: float):
    if not -1.0 < b <= 0.0:
        raise ValueError("shape parameter b must lie in (-1, 0]")
    if b == 0.0:
        return (lambda u: u * (1.0 - u)), (lambda u: 1.0 - u), -1.0
    return (lambda u: u * (1.0 - u) * (1.0 + b * u)), \
        (lambda u: (1.0 - u) * (1.0 + b * u)), -(1.0 + b)


def separable(profile: TimeProfile, b: float = 0.0) -> KppNonlinearity:
    """``f(t, u) = m(t) * u(1-u)(1+bu)``; ``b = 0`` is the logistic term.

    The shape has unit slope at zero, so ``mu(t) = m(t)``; ``zeta`` envelopes are
    the exact ``sup_u |f/f_pm - 1| = |m(t)/m_pm - 1|``.
    """
    shape, per_u, dshape1 = _shape(b)
    m = profile.fn
    mm, mp = profile.lim_minus, profile.lim_plus
    shape_key = ("logistic",) if b == 0.0 else ("concave", b)

    def ev(t, u):
        return m(t) * shape(np.asarray(u, dtype=float))

    def rate(t, u):
        return m(t) * per_u(np.asarray(u, dtype=float))

    return KppNonlinearity(
        eval=ev,
        f_minus=lambda u: mm * shape(np.asarray(u, dtype=float)),
        f_plus=lambda u: mp * shape(np.asarray(u, dtype=float)),
        mu_minus=mm,
        mu_plus=mp,
        zeta_minus=lambda t: float(abs(m(t) / mm - 1.0)),
        zeta_plus=lambda t: float(abs(m(t) / mp - 1.0)),
        # u(1-u)(1+bu) >= u - (1-b)u^2 on [0, 1]
        kpp_constants=(profile.sup * (1.0 - b), 1.0, 1.0),
        mu=lambda t: float(m(t)),
        rate=rate,
        lipschitz=profile.sup,
        key=shape_key + profile.key,
        limit_keys=(shape_key + ("mu", mm), shape_key + ("mu", mp)),
    )


def logistic(mu: float = 1.0) -> KppNonlinearity:
    return separable(constant_profile(mu))


def homogeneous(mu0: float = 1.0, b: float = 0.0) -> HomogeneousKpp:
    """Time-independent ``g(u) = mu0 * u(1-u)(1+bu)``."""
    shape, _, dshape1 = _shape(b)
    key = (("logistic",) if b == 0.0 else ("concave", b)) + ("mu", float(mu0))
    return HomogeneousKpp(lambda u: mu0 * shape(np.asarray(u, dtype=float)),
                          float(mu0), key, dg1=mu0 * dshape1)


def autonomous(g: HomogeneousKpp) -> KppNonlinearity:
    """``f(t, u) = g(u)``; built-in families keep their closed forms."""
    key = tuple(g.key)
    if len(key) >= 3 and key[-2] == "mu" and key[0] in ("logistic", "concave"):
        b = 0.0 if key[0] == "logistic" else float(key[1])
        return separable(constant_profile(g.mu0), b)
    return KppNonlinearity(
        eval=lambda t, u: g(np.asarray(u, dtype=float)),
        f_minus=g.g, f_plus=g.g, mu_minus=g.mu0, mu_plus=g.mu0,
        zeta_minus=lambda t: 0.0, zeta_plus=lambda t: 0.0,
        mu=lambda t: g.mu0, key=("autonomous",) + key, limit_keys=(key, key),
    )


# ---------------------------------------------------------------------------
# hypotheses

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    violation: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]
    t_samples: tuple[float, ...]
    u_samples: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<28s} {c.violation:.3e}"
                 for c in self.checks]
        return "\n".join(lines)


def validate_kpp(f: KppNonlinearity, t_samples: Sequence[float] = DEFAULT_T_SAMPLES,
                 u_samples: Sequence[float] = DEFAULT_U_SAMPLES,
                 limit_tol: float = 1e-3, tol: float = 1e-12) -> ValidationReport:
    """Sample-based check of the standing hypotheses on ``f``.

    Every check records the worst violation found on the sample grid. The
    limit check compares ``f(t, .)/f_pm(.)`` with 1 at the smallest and largest
    ``t`` sample; the C^{1,omega} lower bound uses ``f.kpp_constants``.
    """
    ts = np.asarray(sorted(t_samples), dtype=float)
    us = np.asarray(sorted(u_samples), dtype=float)
    if ts.size == 0 or us.size == 0:
        raise ValueError("t_samples and u_samples must be nonempty")
    if np.any(us <= 0.0) or np.any(us > 1.0):
        raise ValueError("u_samples must lie in (0, 1]; u = 0 is excluded")

    vals = np.array([np.asarray(f.eval(t, us), dtype=float) for t in ts])
    checks = []

    zeros = max(max(abs(float(f.eval(t, np.array([0.0]))[0])),
                    abs(float(f.eval(t, np.array([1.0]))[0]))) for t in ts)
    checks.append(Check("zeros at u=0,1", zeros <= tol, zeros))

    neg = float(max(0.0, -vals.min()))
    checks.append(Check("nonnegative", neg <= tol, neg))

    ratio = vals / us
    incr = float(max(0.0, np.diff(ratio, axis=1).max())) if us.size > 1 else 0.0
    checks.append(Check("f(t,u)/u nonincreasing", incr <= tol, incr))

    inner = us < 1.0
    worst = 0.0
    for t, lim in ((ts[0], f.f_minus), (ts[-1], f.f_plus)):
        denom = np.asarray(lim(us[inner]), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            dev = np.abs(np.asarray(f.eval(t, us[inner]), dtype=float) / denom - 1.0)
        worst = max(worst, float(np.nan_to_num(dev, nan=np.inf).max(initial=0.0)))
    checks.append(Check("f/f_pm -> 1 at extreme t", worst <= limit_tol, worst))

    lim_pos = 0.0
    for lim in (f.f_minus, f.f_plus):
        lim_pos = max(lim_pos, float(max(0.0, -np.asarray(lim(us[inner]), dtype=float).min(initial=1.0))))
    ok_pos = lim_pos == 0.0 and bool(np.all(np.asarray(f.f_minus(us[inner])) > 0)) \
        and bool(np.all(np.asarray(f.f_plus(us[inner])) > 0))
    checks.append(Check("f_pm > 0 on (0,1)", ok_pos, lim_pos))

    c, omega, delta = f.kpp_constants
    small = us < delta
    worst_c = 0.0
    for k, t in enumerate(ts):
        bound = mu_of_t(f, t) * us[small] - c * us[small] ** (1.0 + omega)
        worst_c = max(worst_c, float(max(0.0, (bound - vals[k, small]).max(initial=0.0))))
    checks.append(Check("C1omega lower bound", worst_c <= 1e-9, worst_c))

    return ValidationReport(tuple(checks), tuple(ts), tuple(us))


def mu_of_t(f: KppNonlinearity, t: float) -> float:
    """``d_u f(t, 0)``; closed form when available, else a one-sided
    difference at ``h = 1e-7`` Richardson-combined with ``2h``."""
    if f.mu is not None:
        return float(f.mu(t))
    h = FD_STEP
    d1 = float(f.eval(t, np.array([h]))[0]) / h
    d2 = float(f.eval(t, np.array([2 * h]))[0]) / (2 * h)
    return 2.0 * d1 - d2


# ---------------------------------------------------------------------------
# Theta envelope

@dataclass(frozen=True)
class ThetaEnvelope:
    """Running integral ``Theta(t)`` of a nonnegative envelope ``zeta``.

    ``values[i] = Theta(t_grid[i])``; calling the object evaluates Theta at
    any time (exactly on the grid, by quadrature from the nearest grid point
    otherwise).
    """

    t_grid: np.ndarray
    values: np.ndarray
    theta_infinity: float
    source: Callable[[float], float]
    error_bound: float
    t_trunc: float
    tail: float
    tail_monotone: bool

    def __call__(self, t: float) -> float:
        t = float(t)
        i = int(np.searchsorted(self.t_grid, t, side="right")) - 1
        if i >= 0 and self.t_grid[i] == t:
            return float(self.values[i])
        if i < 0:
            base_t, base = self.t_trunc, self.tail
            if t < self.t_trunc:
                val, _ = integrate.quad(self.source, -np.inf, t, limit=200)
                return float(max(val, 0.0))
        else:
            base_t, base = float(self.t_grid[i]), float(self.values[i])
        inc, _ = integrate.quad(self.source, base_t, t, limit=200)
        return base + max(inc, 0.0)

    @property
    def theta(self) -> Callable[[float], float]:
        return self.__call__


def theta_envelope(zeta: Callable[[float], float], t_grid: Sequence[float],
                   t_trunc: float = -200.0, tol: float = 1e-8) -> ThetaEnvelope:
    """Tabulate ``Theta(t) = int_{-inf}^t zeta`` on ``t_grid``.

    The integral is split at ``t_trunc``: the tail below it goes through an
    infinite-range quadrature whose error estimate must stay under ``tol``,
    the rest is accumulated interval by interval (nonnegative increments, so
    the table is nondecreasing exactly). ``zeta`` is assumed monotone below
    ``t_trunc``; the assumption is verified on samples and reported.
    """
    grid = np.asarray(sorted(t_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("empty t_grid")
    t_trunc = min(t_trunc, float(grid[0]))

    probe = np.array([float(zeta(s)) for s in t_trunc - np.geomspace(1.0, 1e3, 40)[::-1]])
    probe = probe[::-1]
    if np.any(probe < 0):
        raise IntegrabilityError("zeta must be nonnegative")
    # values ordered from far left towards t_trunc: nondecreasing if monotone
    tail_monotone = bool(np.all(np.diff(probe[::-1]) >= -1e-15 * max(probe.max(), 1.0)) or
                         np.all(np.diff(probe[::-1]) <= 1e-15 * max(probe.max(), 1.0)))

    if float(zeta(t_trunc)) == 0.0 and float(np.max(probe)) == 0.0:
        tail, tail_err = 0.0, 0.0
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                tail, tail_err = integrate.quad(zeta, -np.inf, t_trunc, limit=500)
            except integrate.IntegrationWarning as exc:
                raise IntegrabilityError(f"tail of zeta below {t_trunc} not integrable: {exc}")
        if not math.isfinite(tail) or tail_err > tol:
            raise IntegrabilityError(
                f"tail estimate below {t_trunc} unreliable (err {tail_err:.2e} > {tol:.1e})")

    values = np.empty_like(grid)
    err = tail_err
    acc = tail
    prev = t_trunc
    for i, t in enumerate(grid):
        if t > prev:
            inc, e = integrate.quad(zeta, prev, t, limit=200)
            acc += max(inc, 0.0)
            err += e
        values[i] = acc
        prev = t
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        rest, _ = integrate.quad(zeta, float(grid[-1]), np.inf, limit=200)
    total = float(values[-1] + max(rest, 0.0)) if math.isfinite(rest) else math.inf
    return ThetaEnvelope(grid, values, total, zeta, float(err), float(t_trunc),
                         float(tail), tail_monotone)


# ---------------------------------------------------------------------------
# diffusivity and time change

@dataclass(frozen=True)
class DiffusivityProfile:
    """``sigma(t) >= floor > 0`` with ``tau(t) = int_0^t sigma``."""

    sigma: Callable[[float], float]
    sigma_minus: float
    sigma_plus: float
    tau: Callable[[float], float]
    tau_inverse: Callable[[float], float]
    floor: float
    key: tuple = ("custom",)

    def __post_init__(self):
        if not (self.floor > 0 and self.sigma_minus > 0 and self.sigma_plus > 0):
            raise HypothesisError("diffusivity must be bounded below by a positive constant")

    def inverse(self) -> "DiffusivityProfile":
        """Diffusivity ``1/sigma(tau^{-1}(s))`` of the reverse time change."""
        d = self
        return DiffusivityProfile(
            sigma=lambda s: 1.0 / d.sigma(d.tau_inverse(s)),
            sigma_minus=1.0 / d.sigma_minus,
            sigma_plus=1.0 / d.sigma_plus,
            tau=d.tau_inverse,
            tau_inverse=d.tau,
            floor=1.0 / max(d.sigma_minus, d.sigma_plus, _sup_hint(d)),
            key=("inverse",) + d.key,
        )


def _sup_hint(d: DiffusivityProfile) -> float:
    ts = np.linspace(-50, 50, 2001)
    return float(max(d.sigma(t) for t in ts))


def _invert_monotone(tau: Callable[[float], float], s: float, scale: float) -> float:
    lo, hi = -1.0, 1.0
    while tau(lo) > s:
        lo *= 2.0
    while tau(hi) < s:
        hi *= 2.0
    return optimize.brentq(lambda t: tau(t) - s, lo, hi, xtol=1e-15 * max(1.0, abs(s) / scale),
                           rtol=4 * np.finfo(float).eps, maxiter=200)


def constant_diffusivity(value: float) -> DiffusivityProfile:
    v = float(value)
    return DiffusivityProfile(lambda t: v, v, v, lambda t: v * t, lambda s: s / v, v,
                              ("constant", v))


def tanh_diffusivity(minus: float, plus: float, width: float = 1.0) -> DiffusivityProfile:
    """``sigma(t) = (s- + s+)/2 + (s+ - s-)/2 * tanh(t/width)`` with closed-form tau."""
    mid, half = 0.5 * (minus + plus), 0.5 * (plus - minus)

    def sigma(t):
        return mid + half * math.tanh(t / width)

    def tau(t):
        x = t / width
        log_cosh = abs(x) + math.log1p(math.exp(-2.0 * abs(x))) - math.log(2.0)
        return mid * t + half * width * log_cosh

    floor = min(minus, plus)
    return DiffusivityProfile(sigma, float(minus), float(plus), tau,
                              lambda s: _invert_monotone(tau, s, floor), floor,
                              ("tanh", minus, plus, width))


def diffusivity_from_sigma(sigma: Callable[[float], float], sigma_minus: float,
                           sigma_plus: float, floor: float) -> DiffusivityProfile:
    """Generic profile: tau by adaptive quadrature, tau^{-1} by root finding."""

    def tau(t):
        val, _ = integrate.quad(sigma, 0.0, t, limit=200, epsabs=1e-13, epsrel=1e-13)
        return val

    return DiffusivityProfile(sigma, sigma_minus, sigma_plus, tau,
                              lambda s: _invert_monotone(tau, s, floor), floor)


def time_change(f: KppNonlinearity, d: DiffusivityProfile) -> KppNonlinearity:
    """Reaction term of ``v_t = v_xx + f(tau^{-1}(t), v)/sigma(tau^{-1}(t))``.

    If ``u`` solves ``u_t = sigma(t) u_xx + f(t, u)`` then ``v(t, x) =
    u(tau^{-1}(t), x)`` solves the returned problem. Limits become
    ``f_pm/sigma_pm``; the envelope for ``t -> -inf`` is
    ``(sigma_-/inf sigma) zeta(tau^{-1} t) + |sigma_-/sigma(tau^{-1} t) - 1|``.
    """
    sm, sp, floor = d.sigma_minus, d.sigma_plus, d.floor
    tinv, sig = d.tau_inverse, d.sigma

    def ev(t, u):
        s = tinv(t)
        return f.eval(s, u) / sig(s)

    rate = None
    if f.rate is not None:
        def rate(t, u):
            s = tinv(t)
            return f.rate(s, u) / sig(s)

    def mu(t):
        s = tinv(t)
        return mu_of_t(f, s) / sig(s)

    def envelope(zeta, s_lim):
        if zeta is None:
            return None

        def z(t):
            s = tinv(t)
            return s_lim / floor * zeta(s) + abs(s_lim / sig(s) - 1.0)
        return z

    c, omega, delta = f.kpp_constants
    return KppNonlinearity(
        eval=ev,
        f_minus=lambda u: f.f_minus(u) / sm,
        f_plus=lambda u: f.f_plus(u) / sp,
        mu_minus=f.mu_minus / sm,
        mu_plus=f.mu_plus / sp,
        zeta_minus=envelope(f.zeta_minus, sm),
        zeta_plus=envelope(f.zeta_plus, sp),
        kpp_constants=(c / floor, omega, delta),
        mu=mu,
        rate=rate,
        lipschitz=None if f.lipschitz is None else f.lipschitz / floor,
        key=("time-change",) + f.key + d.key,
        limit_keys=(f.limit_keys[0] + ("sigma", sm), f.limit_keys[1] + ("sigma", sp)),
    )


def rescale(f: KppNonlinearity, factor: Callable[[float], float], time_map: Callable[[float], float],
            ) -> KppNonlinearity:
    """``factor(t) * f(time_map(t), u)``; helper used by the inverse time change."""
    return replace(f, eval=lambda t, u: factor(t) * f.eval(time_map(t), u))
