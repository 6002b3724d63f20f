"""Traveling waves, the spatially flat solution and u_mu envelopes for
homogeneous KPP terms ``g``.

Profiles solve ``phi'' + c phi' + g(phi) = 0`` with ``phi(-inf) = 1`` and
``phi(+inf) = 0``, normalised so that ``phi(xi) ~ exp(-lambda_c xi)`` (or
``xi exp(-lambda* xi)`` at the minimal speed) as ``xi -> +inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .model import HomogeneousKpp

SEED = 1e-8
LOG_FLOOR = -700.0


class ProfileError(RuntimeError):
    """Shooting failed or produced an inadmissible profile."""


def decay_constants(c: float, mu0: float) -> tuple[float, float]:
    """Roots of ``lambda^2 - c lambda + mu0 = 0``, smaller first.

    Raises
    ------
    ValueError
        If ``c < 2 sqrt(mu0)``, where the roots are complex.
    """
    if not mu0 > 0:
        raise ValueError("mu0 must be positive")
    disc = c * c - 4.0 * mu0
    if disc < 0.0:
        if disc > -1e-12 * c * c:
            disc = 0.0
        else:
            raise ValueError(f"c = {c} is below the minimal speed {2 * math.sqrt(mu0)}")
    root = math.sqrt(disc)
    large = 0.5 * (c + root)
    # product form avoids cancellation in the small root
    small = mu0 / large
    return small, large


def critical_speed(mu0: float) -> float:
    return 2.0 * math.sqrt(mu0)


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Sampled standard front ``phi_c``.

    ``xi``, ``phi`` and ``dphi`` are samples on a uniform grid after
    normalisation; ``normalization_shift`` is the translation applied to the
    raw shooting coordinate. Values outside the sampled range come from the
    saddle asymptote at ``-inf`` and the tail asymptote at ``+inf``.
    """

    speed: float
    lambda_c: float
    xi: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    normalization_shift: float
    critical_flag: bool
    mu0: float
    residual: float
    tail_offset: float = 0.0
    saddle_rate: float = 1.0
    key: tuple = ()
    _logphi: PchipInterpolator = field(default=None, repr=False)
    _inverse: PchipInterpolator = field(default=None, repr=False)

    def __post_init__(self):
        logphi = PchipInterpolator(self.xi, np.log(self.phi), extrapolate=False)
        logit = np.log(self.phi) - np.log1p(-self.phi)
        # logit decreases in xi; reverse to get an increasing abscissa
        inv = PchipInterpolator(logit[::-1], self.xi[::-1], extrapolate=False)
        object.__setattr__(self, "_logphi", logphi)
        object.__setattr__(self, "_inverse", inv)

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.xi, self.phi])

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        lo, hi = self.xi[0], self.xi[-1]
        mid = (xi >= lo) & (xi <= hi)
        out[mid] = np.exp(self._logphi(xi[mid]))
        left = xi < lo
        if left.any():
            psi0 = 1.0 - self.phi[0]
            out[left] = 1.0 - psi0 * np.exp(self.saddle_rate * (xi[left] - lo))
        right = xi > hi
        if right.any():
            out[right] = self.tail(xi[right]) * (self.phi[-1] / float(self.tail(hi)))
        return out if out.ndim else float(out)

    def tail(self, xi) -> np.ndarray:
        """Leading tail term: ``exp(-l xi)``, or ``(xi + a) exp(-l xi)`` at the
        minimal speed, with the fitted offset ``a``."""
        xi = np.asarray(xi, dtype=float)
        if self.critical_flag:
            return (xi + self.tail_offset) * np.exp(-self.lambda_c * xi)
        return np.exp(-self.lambda_c * xi)

    def inverse(self, value) -> np.ndarray:
        """``phi^{-1}`` on the sampled range of values."""
        v = np.asarray(value, dtype=float)
        vmin, vmax = self.phi[-1], self.phi[0]
        if np.any(v < vmin) or np.any(v > vmax) or np.any(~np.isfinite(v)):
            raise ValueError(f"value outside the sampled profile range [{vmin:.3e}, {vmax:.6f}]")
        out = self._inverse(np.log(v) - np.log1p(-v))
        return out if np.ndim(out) else float(out)

    @property
    def half_level_xi(self) -> float:
        return float(self.inverse(0.5))

    def asymptotic_ratio(self, xi: Optional[float] = None) -> float:
        """``phi e^{l xi}`` (or ``phi e^{l xi}/xi`` at the minimal speed) at ``xi``."""
        xi = self.xi[-1] if xi is None else xi
        val = float(self(np.array([xi]))[0]) * math.exp(self.lambda_c * xi)
        return val / xi if self.critical_flag else val

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.xi, self.phi, self.dphi]), delimiter=",",
                   header="xi,phi,dphi", comments="", fmt="%.17g")


def _rhs(g: HomogeneousKpp, c: float):
    mu0 = g.mu0

    def per_capita(phi):
        return g(phi) / phi if phi > 1e-250 else mu0

    def rhs(_, y):
        w, q = y
        phi = math.exp(w)
        return (q, -c * q - q * q - per_capita(phi))

    return rhs


def default_xi_range(g: HomogeneousKpp, c: float) -> tuple[float, float]:
    """Range on which both limits are reached to within about ``1e-7``."""
    lam = decay_constants(c, g.mu0)[0]
    cstar = critical_speed(g.mu0)
    r_plus = 0.5 * (-c + math.sqrt(c * c - 4.0 * g.slope_at_one()))
    lo = -5.0 * math.ceil((3.0 + 17.0 / r_plus) / 5.0)
    if abs(c - cstar) <= 1e-12 * cstar:
        return lo, 5.0 * math.ceil(max(150.0, 40.0 / lam) / 5.0)
    return lo, 5.0 * math.ceil(max(60.0, 20.0 / lam) / 5.0)


def compute_profile(g: HomogeneousKpp, c: float, xi_range: Optional[tuple[float, float]] = None,
                    dxi: float = 0.01, seed: float = SEED, check: bool = True) -> WaveProfile:
    """Standard front of speed ``c`` for ``g``, sampled on ``xi_range``.

    The front is shot from the saddle ``(1, 0)`` along its unstable direction
    (``1 - phi = seed * exp(r xi)``), integrating ``w = ln phi`` and
    ``q = phi'/phi`` so the tail is resolved far below the underflow threshold.
    The tail amplitude is then read off and ``xi`` translated so that the
    normalisation holds.

    Raises
    ------
    ValueError
        If ``c`` is below the minimal speed.
    ProfileError
        If the trajectory does not reach the tail, overshoots, or the ODE
        residual on the sampled grid exceeds ``1e-6``.
    """
    lam, lam_large = decay_constants(c, g.mu0)
    cstar = critical_speed(g.mu0)
    critical = abs(c - cstar) <= 1e-12 * cstar
    if critical:
        lam = math.sqrt(g.mu0)
    dg1 = g.slope_at_one()
    if not dg1 < 0:
        raise ProfileError("g'(1) must be negative")
    r_plus = 0.5 * (-c + math.sqrt(c * c - 4.0 * dg1))

    y0 = (math.log1p(-seed), -seed * r_plus / (1.0 - seed))

    def floor_event(_, y):
        return y[0] - LOG_FLOOR
    floor_event.terminal = True

    def overshoot(_, y):
        return y[1]
    overshoot.terminal = True
    overshoot.direction = 1

    span = 50.0 + 3.0 * (-LOG_FLOOR) / lam
    sol = integrate.solve_ivp(_rhs(g, c), (0.0, span), y0, method="DOP853", rtol=1e-12,
                              atol=1e-14, dense_output=True, events=(floor_event, overshoot))
    if sol.status < 0:
        raise ProfileError(f"shooting failed: {sol.message}")
    if sol.t_events[1].size:
        raise ProfileError("profile turned upward (seed too large or c inadmissible)")
    if not sol.t_events[0].size:
        raise ProfileError("trajectory did not reach the tail regime")
    s_end = float(sol.t_events[0][0])

    # tail amplitude from the last stretch of the trajectory
    s_fit = np.linspace(s_end - 0.4 * (s_end - 0.0) , s_end, 400)
    w_fit = sol.sol(s_fit)[0]
    if critical:
        ratio = np.exp(w_fit + lam * s_fit - (w_fit[-1] + lam * s_fit[-1]))
        B, A = np.polyfit(s_fit, ratio, 1)
        scale = w_fit[-1] + lam * s_fit[-1]
        lnB = math.log(B) + scale
        shift = lnB / lam
        tail_offset = A / B + shift
    else:
        # remove residual slope from the faster modes by using the final value
        lnA = float(w_fit[-1] + lam * s_fit[-1])
        shift = lnA / lam
        tail_offset = 0.0

    lo, hi = default_xi_range(g, c) if xi_range is None else xi_range
    if not hi > lo:
        raise ValueError("xi_range must be increasing")
    n = int(round((hi - lo) / dxi)) + 1
    xi = lo + dxi * np.arange(n)
    s = xi + shift
    w = np.empty(n)
    q = np.empty(n)
    inside = (s >= 0.0) & (s <= s_end)
    if inside.any():
        w[inside], q[inside] = sol.sol(s[inside])
    before = s < 0.0
    if before.any():
        psi = seed * np.exp(r_plus * s[before])
        w[before] = np.log1p(-psi)
        q[before] = -r_plus * psi / (1.0 - psi)
    after = s > s_end
    if after.any():
        if critical:
            w[after] = np.log(xi[after] + tail_offset) - lam * xi[after]
            q[after] = 1.0 / (xi[after] + tail_offset) - lam
        else:
            w[after] = -lam * xi[after]
            q[after] = -lam
    phi = np.exp(w)
    dphi = q * phi

    resid = _residual(xi, phi, c, g) if n >= 5 else 0.0
    prof = WaveProfile(float(c), float(lam), xi, phi, dphi, float(shift), bool(critical),
                       float(g.mu0), float(resid), float(tail_offset), float(r_plus),
                       key=tuple(g.key) + ("c", float(c), "dxi", float(dxi)))
    if check:
        if not np.all(np.diff(phi) < 0):
            raise ProfileError("sampled profile is not strictly decreasing")
        if phi[0] < 1 - 1e-6 or phi[-1] > 1e-6:
            raise ProfileError(
                f"sampled range does not reach the limits (phi = {phi[0]:.3g} .. {phi[-1]:.3g})")
        if resid > 1e-6:
            raise ProfileError(f"ODE residual {resid:.2e} exceeds 1e-6")
    return prof


def _residual(xi, phi, c, g) -> float:
    h = xi[1] - xi[0]
    p = phi
    d2 = (-p[4:] + 16 * p[3:-1] - 30 * p[2:-2] + 16 * p[1:-3] - p[:-4]) / (12 * h * h)
    d1 = (-p[4:] + 8 * p[3:-1] - 8 * p[1:-3] + p[:-4]) / (12 * h)
    return float(np.max(np.abs(d2 + c * d1 + g(p[2:-2]))))


_CACHE: dict = {}


def cached_profile(g: HomogeneousKpp, c: float, xi_range=None, dxi: float = 0.01
                   ) -> WaveProfile:
    """``compute_profile`` memoised on (family, parameters, c, range, dxi)."""
    rng = None if xi_range is None else tuple(map(float, xi_range))
    key = (tuple(g.key), float(c), rng, float(dxi))
    prof = _CACHE.get(key)
    if prof is None:
        prof = compute_profile(g, c, xi_range, dxi)
        _CACHE[key] = prof
    return prof


# ---------------------------------------------------------------------------
# flat solution

@lru_cache(maxsize=64)
def _theta_solution(key, g: HomogeneousKpp):
    mu0 = g.mu0
    t0 = -40.0 / mu0
    dg1 = abs(g.slope_at_one())
    t1 = 40.0 / mu0 + 40.0 / dg1

    def rhs(_, y):
        th = math.exp(y[0])
        return (g(th) / th,)

    sol = integrate.solve_ivp(rhs, (t0, t1), (mu0 * t0,), method="DOP853", rtol=1e-12,
                              atol=1e-14, dense_output=True)
    return t0, t1, sol.sol


def theta_ode(g: HomogeneousKpp, t):
    """Solution of ``theta' = g(theta)`` with ``theta(t) ~ exp(g'(0) t)`` at ``-inf``.

    Integrated for ``ln theta`` from ``t0 = -40/g'(0)``; below ``t0`` the
    asymptote ``exp(g'(0) t)`` is returned, above the integration range 1.
    """
    t0, t1, sol = _theta_solution(tuple(g.key), g)
    t_arr = np.asarray(t, dtype=float)
    out = np.empty_like(t_arr)
    lo = t_arr < t0
    hi = t_arr > t1
    mid = ~(lo | hi)
    out[lo] = np.exp(g.mu0 * t_arr[lo])
    out[hi] = 1.0
    if mid.any():
        out[mid] = np.exp(sol(t_arr[mid])[0])
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# atomic measures

@dataclass(frozen=True)
class AtomicMeasure:
    """Finite atomic measure on speeds ``[c*, inf)`` plus a mass at infinity."""

    atoms: tuple[tuple[float, float], ...]
    mass_at_infinity: float = 0.0

    def __post_init__(self):
        atoms = tuple(sorted((float(c), float(m)) for c, m in self.atoms))
        if any(m <= 0 for _, m in atoms):
            raise ValueError("atom masses must be positive")
        if self.mass_at_infinity < 0:
            raise ValueError("mass_at_infinity must be nonnegative")
        object.__setattr__(self, "atoms", atoms)
        if self.total_mass <= 0:
            raise ValueError("measure must have positive total mass")

    @property
    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms) + self.mass_at_infinity

    @property
    def speeds(self) -> tuple[float, ...]:
        return tuple(c for c, _ in self.atoms)

    @property
    def leftmost(self) -> float:
        if not self.atoms:
            raise ValueError("no atoms")
        return self.atoms[0][0]

    @property
    def rightmost(self) -> float:
        if not self.atoms:
            raise ValueError("no atoms")
        return self.atoms[-1][0]

    def split(self, cstar: float, tol: float = 1e-12):
        """(critical mass, supercritical atoms, M) with M excluding the critical atom."""
        crit = sum(m for c, m in self.atoms if abs(c - cstar) <= tol * cstar)
        sup = tuple((c, m) for c, m in self.atoms if c > cstar * (1 + tol))
        if any(c < cstar * (1 - tol) for c, _ in self.atoms):
            raise ValueError("atoms below the minimal speed are not supported")
        M = sum(m for _, m in sup) + self.mass_at_infinity
        return crit, sup, M

    def tail_offsets(self, mu0: float) -> dict[float, float]:
        """Shifts ``s_i`` with ``m_i M^{-1} exp(-l_i (x - c_i t - c_i ln M))
        = exp(-l_i (x - c_i t - s_i))`` for the supercritical atoms."""
        _, sup, M = self.split(critical_speed(mu0))
        out = {}
        for c, m in sup:
            lam = decay_constants(c, mu0)[0]
            out[c] = (math.log(m) + (lam * c - 1.0) * math.log(M)) / lam
        return out


def umu_envelopes(m: AtomicMeasure, profiles: Mapping[float, WaveProfile], g: HomogeneousKpp,
                  t: float, x):
    """Lower and upper bounds on ``u_mu(t, x)`` for right-moving atoms and
    the mass at infinity.

    Returns
    -------
    lower, upper : float or ndarray
    """
    cstar = critical_speed(g.mu0)
    crit, sup, M = m.split(cstar)
    for c, _ in m.atoms:
        if not any(abs(c - k) <= 1e-12 * max(1.0, c) for k in profiles):
            raise KeyError(f"missing profile for speed {c}")

    def prof(c):
        for k, p in profiles.items():
            if abs(c - k) <= 1e-12 * max(1.0, c):
                return p

    x = np.asarray(x, dtype=float)
    lower_terms = []
    upper = np.zeros_like(x)
    if crit > 0:
        term = prof(cstar)(x - cstar * t - cstar * math.log(crit))
        lower_terms.append(term)
        upper = upper + term
    if M > 0:
        lnM = math.log(M)
        acc = np.zeros_like(x)
        for c, mass in sup:
            z = x - c * t - c * lnM
            acc = acc + mass / M * prof(c)(z)
            lam = prof(c).lambda_c
            upper = upper + mass / M * np.exp(-lam * z)
        if m.mass_at_infinity > 0:
            acc = acc + m.mass_at_infinity / M * theta_ode(g, t + lnM)
            upper = upper + m.mass_at_infinity / M * math.exp(g.mu0 * (t + lnM))
        lower_terms.append(acc)
    lower = np.maximum.reduce(lower_terms) if len(lower_terms) > 1 else lower_terms[0]
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def steepness_envelope(profile: WaveProfile, anchor_value: float, x):
    """``phi(phi^{-1}(anchor_value) + x)``."""
    base = profile.inverse(anchor_value)
    x = np.asarray(x, dtype=float)
    out = np.where(x == 0.0, anchor_value, profile(x + base))
    return out if out.ndim else float(out)
