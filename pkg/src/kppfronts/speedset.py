"""Closed-form relations between tail decay rates and asymptotic speeds.

For limits ``mu_-`` and ``mu_+`` of ``d_u f(t, 0)``, the admissible decay pairs
are

    K = {(k-, k+) : 0 < k- <= sqrt(mu_-), 0 < k+ <= min(k-, sqrt(mu_+))},

and the pair ``(k-, k+)`` yields the past and future speeds
``c_pm = k_pm + mu_pm / k_pm``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

REL_TOL = 1e-12


@dataclass(frozen=True)
class DecayPair:
    kappa_minus: float
    kappa_plus: float

    def violations(self, mu_minus: float, mu_plus: float, tol: float = REL_TOL) -> list[str]:
        """Names of the constraints of K that this pair breaks."""
        km, kp = self.kappa_minus, self.kappa_plus
        out = []
        if not km > 0:
            out.append("kappa_minus > 0")
        if not kp > 0:
            out.append("kappa_plus > 0")
        if km > math.sqrt(mu_minus) * (1 + tol):
            out.append("kappa_minus <= sqrt(mu_minus)")
        if kp > km * (1 + tol):
            out.append("kappa_plus <= kappa_minus")
        if kp > math.sqrt(mu_plus) * (1 + tol):
            out.append("kappa_plus <= sqrt(mu_plus)")
        return out

    def in_K(self, mu_minus: float, mu_plus: float) -> bool:
        return not self.violations(mu_minus, mu_plus)


@dataclass(frozen=True)
class SpeedPair:
    c_minus: float
    c_plus: float


@dataclass(frozen=True)
class Admissibility:
    """Verdict with its witness: the decay pair, or ``kappa`` alone."""

    admissible: bool
    witness: Optional[DecayPair]
    kappa: Optional[float]
    min_c_plus: Optional[float]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.admissible


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive")


def small_root(c: float, mu: float) -> float:
    """Smaller root of ``k^2 - c k + mu = 0`` (``c >= 2 sqrt(mu)``)."""
    disc = c * c - 4.0 * mu
    if disc < 0:
        if disc > -REL_TOL * c * c:
            disc = 0.0
        else:
            raise ValueError(f"c = {c} below 2 sqrt(mu) = {2 * math.sqrt(mu)}")
    return 2.0 * mu / (c + math.sqrt(disc))


def speed_of_decay(kappa: float, mu: float) -> float:
    return kappa + mu / kappa


def kappa_from_cminus(c_minus: float, mu_minus: float, mu_plus: float) -> float:
    """``kappa = min(sqrt(mu_+), (c_- - sqrt(c_-^2 - 4 mu_-))/2)``.

    The least admissible future speed is then ``kappa + mu_+/kappa``.
    """
    _check_positive(mu_minus=mu_minus, mu_plus=mu_plus)
    if c_minus < 2.0 * math.sqrt(mu_minus) * (1 - REL_TOL):
        raise ValueError(f"c_minus = {c_minus} is below 2 sqrt(mu_minus)")
    return min(math.sqrt(mu_plus), small_root(c_minus, mu_minus))


def min_future_speed(c_minus: float, mu_minus: float, mu_plus: float) -> float:
    k = kappa_from_cminus(c_minus, mu_minus, mu_plus)
    return speed_of_decay(k, mu_plus)


def speeds_from_decays(d: DecayPair, mu_minus: float, mu_plus: float) -> SpeedPair:
    """``c_pm = kappa_pm + mu_pm / kappa_pm`` for ``d`` in K."""
    _check_positive(mu_minus=mu_minus, mu_plus=mu_plus)
    bad = d.violations(mu_minus, mu_plus)
    if bad:
        raise ValueError("decay pair outside K: violates " + ", ".join(bad))
    return SpeedPair(speed_of_decay(d.kappa_minus, mu_minus),
                     speed_of_decay(d.kappa_plus, mu_plus))


def _kappa_plus_witness(c_plus: float, mu_plus: float, kappa_minus: float) -> Optional[float]:
    """Root of ``k + mu_+/k = c_+`` in ``(0, min(kappa_minus, sqrt(mu_+))]``."""
    k = small_root(c_plus, mu_plus)
    if k <= min(kappa_minus, math.sqrt(mu_plus)) * (1 + REL_TOL):
        return min(k, kappa_minus)
    return None


def admissible(p: SpeedPair, mu_minus: float, mu_plus: float) -> Admissibility:
    """Whether ``(c_-, c_+)`` are the speeds of some transition front.

    Conditions: ``c_- >= 2 sqrt(mu_-)`` and ``c_+ >= kappa + mu_+/kappa`` with
    ``kappa`` from :func:`kappa_from_cminus`. Equalities count as admissible.
    """
    _check_positive(mu_minus=mu_minus, mu_plus=mu_plus)
    cm, cp = p.c_minus, p.c_plus
    if not (math.isfinite(cm) and math.isfinite(cp)):
        return Admissibility(False, None, None, None, "non-finite speed")
    if cm < 2.0 * math.sqrt(mu_minus) * (1 - REL_TOL):
        return Admissibility(False, None, None, None, "c_minus < 2 sqrt(mu_minus)")
    kappa = kappa_from_cminus(cm, mu_minus, mu_plus)
    cmin = speed_of_decay(kappa, mu_plus)
    if cp < cmin * (1 - REL_TOL):
        return Admissibility(False, None, kappa, cmin, "c_plus below kappa + mu_plus/kappa")
    km = small_root(cm, mu_minus)
    kp = _kappa_plus_witness(max(cp, cmin), mu_plus, km)
    if kp is None:
        kp = kappa
    return Admissibility(True, DecayPair(km, kp), kappa, cmin)


def global_mean_admissible(gamma: float, mu_minus: float, mu_plus: float) -> bool:
    """Fronts with global mean speed ``gamma`` exist iff ``mu_+ <= mu_-`` and
    ``gamma >= 2 sqrt(mu_-)``."""
    return bool(mu_plus <= mu_minus and gamma >= 2.0 * math.sqrt(mu_minus) * (1 - REL_TOL))


def nr1_future_speed(c_minus: float, mu_minus: float, mu_plus: float) -> float:
    """``c_+ = c_- + 2 (mu_+ - mu_-) / (c_- - sqrt(c_-^2 - 4 mu_-))``."""
    _check_positive(mu_minus=mu_minus, mu_plus=mu_plus)
    if c_minus < 2.0 * math.sqrt(mu_minus) * (1 - REL_TOL):
        raise ValueError(f"c_minus = {c_minus} is below 2 sqrt(mu_minus)")
    disc = max(c_minus * c_minus - 4.0 * mu_minus, 0.0)
    return c_minus + 2.0 * (mu_plus - mu_minus) / (c_minus - math.sqrt(disc))


def thmdecay_future_speed(lam: float, mu_plus: float) -> float:
    """``c_+ = min(lam, sqrt(mu_+)) + mu_+ / min(lam, sqrt(mu_+))``."""
    if not lam > 0:
        raise ValueError("lambda must be positive (lambda = 0 gives no transition front)")
    _check_positive(mu_plus=mu_plus)
    k = min(lam, math.sqrt(mu_plus))
    return k + mu_plus / k


def sigma_admissible(p: SpeedPair, mu_minus: float, mu_plus: float, sigma_minus: float,
                     sigma_plus: float) -> Admissibility:
    """Admissibility for ``u_t = sigma(t) u_xx + f(t, u)``.

    ``c_- >= 2 sqrt(sigma_- mu_-)`` and ``c_+ >= kappa + sigma_+ mu_+ / kappa`` with
    ``kappa = min(sqrt(sigma_+ mu_+), (sigma_+/sigma_-) (c_- - sqrt(c_-^2 - 4 sigma_- mu_-))/2)``.
    The witness decay pair is expressed in the time-changed problem, where the
    speeds are ``c_pm / sigma_pm``.
    """
    _check_positive(mu_minus=mu_minus, mu_plus=mu_plus, sigma_minus=sigma_minus,
                    sigma_plus=sigma_plus)
    cm, cp = p.c_minus, p.c_plus
    if cm < 2.0 * math.sqrt(sigma_minus * mu_minus) * (1 - REL_TOL):
        return Admissibility(False, None, None, None, "c_minus < 2 sqrt(sigma_minus mu_minus)")
    root = small_root(cm, sigma_minus * mu_minus)
    kappa = min(math.sqrt(sigma_plus * mu_plus), sigma_plus / sigma_minus * root)
    cmin = kappa + sigma_plus * mu_plus / kappa
    if cp < cmin * (1 - REL_TOL):
        return Admissibility(False, None, kappa, cmin, "c_plus below kappa + sigma_plus mu_plus/kappa")
    tilde = admissible(SpeedPair(cm / sigma_minus, max(cp, cmin) / sigma_plus),
                       mu_minus / sigma_minus, mu_plus / sigma_plus)
    return Admissibility(True, tilde.witness, kappa, cmin)


def physical_speeds(kappa_minus: float, kappa_plus: float, mu_minus: float, mu_plus: float,
                    sigma_minus: float, sigma_plus: float) -> SpeedPair:
    """Speeds in physical time of the front with decays ``kappa_pm`` in the
    time-changed problem: ``c_pm = sigma_pm kappa_pm + mu_pm / kappa_pm``."""
    return SpeedPair(sigma_minus * kappa_minus + mu_minus / kappa_minus,
                     sigma_plus * kappa_plus + mu_plus / kappa_plus)


# ---------------------------------------------------------------------------
# region of K and its image

@dataclass(frozen=True)
class Region:
    """Boundary polylines of K and of its image in the speed plane.

    ``marks`` names the distinguished points (A, B, C) when ``mu_+ < mu_-``.
    """

    mu_minus: float
    mu_plus: float
    kappa_boundary: np.ndarray
    speed_boundary: np.ndarray
    marks: dict
    segments: dict
    kappa_floor: float

    def to_csv(self, path_kappa, path_speed) -> None:
        np.savetxt(path_kappa, self.kappa_boundary, delimiter=",", header="kappa_minus,kappa_plus",
                   comments="", fmt="%.12g")
        np.savetxt(path_speed, self.speed_boundary, delimiter=",", header="c_minus,c_plus",
                   comments="", fmt="%.12g")


def region_sample(mu_minus: float, mu_plus: float, resolution: int = 100,
                  kappa_floor_fraction: float = 0.05) -> Region:
    """Sample the boundary of K and map it to ``(c_-, c_+)``.

    K is open along ``kappa_+ = 0`` and its image is unbounded there, so the
    polylines are cut at ``kappa_+ = kappa_floor_fraction * sqrt(min(mu_-, mu_+))``.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    _check_positive(mu_minus=mu_minus, mu_plus=mu_plus)
    sm, sp = math.sqrt(mu_minus), math.sqrt(mu_plus)
    floor = kappa_floor_fraction * min(sm, sp)
    s = np.linspace(0.0, 1.0, resolution)
    segments = {}
    marks = {}
    if mu_plus >= mu_minus:
        # triangle: bottom edge, right edge, diagonal back to the origin
        bottom = np.column_stack([floor + s * (sm - floor), np.full_like(s, floor)])
        right = np.column_stack([np.full_like(s, sm), floor + s * (sm - floor)])
        diag = np.column_stack([sm - s * (sm - floor), sm - s * (sm - floor)])
        segments.update(bottom=bottom, right=right, diagonal=diag)
        poly = np.vstack([bottom, right[1:], diag[1:]])
        marks["corner"] = (sm, sm)
    else:
        bottom = np.column_stack([floor + s * (sm - floor), np.full_like(s, floor)])
        ab = np.column_stack([np.full_like(s, sm), floor + s * (sp - floor)])
        bc = np.column_stack([sm - s * (sm - sp), np.full_like(s, sp)])
        diag = np.column_stack([sp - s * (sp - floor), sp - s * (sp - floor)])
        segments.update(bottom=bottom, AB=ab, BC=bc, diagonal=diag)
        poly = np.vstack([bottom, ab[1:], bc[1:], diag[1:]])
        marks.update(A=(sm, 0.0), B=(sm, sp), C=(sp, sp))
    speeds = np.column_stack([poly[:, 0] + mu_minus / poly[:, 0],
                              poly[:, 1] + mu_plus / poly[:, 1]])
    return Region(mu_minus, mu_plus, poly, speeds, marks, segments, floor)


def sample_K(mu_minus: float, mu_plus: float, n: int, rng: Optional[np.random.Generator] = None
             ) -> list[DecayPair]:
    """``n`` pairs in K: ``kappa_-`` uniform on ``(0, sqrt(mu_-)]``, then ``kappa_+``
    uniform on ``(0, min(kappa_-, sqrt(mu_+))]``."""
    rng = rng or np.random.default_rng(0)
    sm, sp = math.sqrt(mu_minus), math.sqrt(mu_plus)
    out = []
    while len(out) < n:
        km = sm * (1.0 - rng.random())
        kp = min(km, sp) * (1.0 - rng.random())
        out.append(DecayPair(km, kp))
    return out
