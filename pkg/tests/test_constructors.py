import math

import numpy as np
import pytest

from kppfronts import constructors as C
from kppfronts import diagnostics as D
from kppfronts import waves
from kppfronts.model import homogeneous, logistic, separable, tanh_profile
from kppfronts.solver import SchemeParams

RAMP = separable(tanh_profile(1.0, 2.0, 2.0))
SMALL = C.RunParams()


@pytest.fixture(scope="module")
def autonomous_front():
    return C.supercritical_front(logistic(1.0), 0.5, 60.0, SMALL)


@pytest.fixture(scope="module")
def ramp_front():
    return C.supercritical_front(RAMP, 0.5, 60.0, SMALL)


@pytest.fixture(scope="module")
def glued():
    return C.glued_front(RAMP, 0.8, 0.5, 60.0)


@pytest.fixture(scope="module")
def two_speed():
    return C.two_speed_homogeneous(homogeneous(1.0), 2.5, 3.0, 60.0)


class TestSupercritical:
    def test_speed(self, autonomous_front):
        assert D.estimate_speed(autonomous_front, (20, 60)).value == pytest.approx(2.5, rel=0.01)

    def test_ramp_speeds(self, ramp_front):
        assert D.estimate_speed(ramp_front, (-50, -20)).value == pytest.approx(2.5, rel=0.02)
        assert D.estimate_speed(ramp_front, (20, 60)).value == pytest.approx(4.5, rel=0.02)

    def test_predicted_position_tracks_front(self, ramp_front):
        # u e^{kappa (x - X_pred)} -> 1 and phi e^{lambda xi} -> 1, so X - X_pred tends to
        # the half-level point of the limiting profile at each end
        gap = ramp_front.X - ramp_front.extras["X_pred"]
        t = ramp_front.times
        past = waves.cached_profile(homogeneous(1.0), 2.5).half_level_xi
        future = waves.cached_profile(homogeneous(2.0), 4.5).half_level_xi
        # slack covers the O(dx^2 + dt) speed error accumulated over the run
        assert np.max(np.abs(gap[(t > -50) & (t < -20)] - past)) < 0.1
        assert np.max(np.abs(gap[t > 20] - future)) < 0.1

    def test_tail_normalization(self, autonomous_front):
        # reference point is the predicted position, where the tail is exactly e^{-kappa x}
        for t in (0.0, 20.0, 40.0):
            s = autonomous_front.snapshot(t)
            Xp = float(np.interp(s.time, autonomous_front.times, autonomous_front.extras["X_pred"]))
            x = np.linspace(10, 25, 16)
            r = s.at(Xp + x) * np.exp(0.5 * x)
            assert np.all((r >= 0.8) & (r <= 1.25))

    def test_kappa_range(self):
        with pytest.raises(ValueError):
            C.supercritical_front(logistic(1.0), 1.0, 10.0, SMALL)


class TestGlued:
    def test_speeds(self, glued):
        assert D.estimate_speed(glued, (-50, -20)).value == pytest.approx(2.05, rel=0.02)
        assert D.estimate_speed(glued, (20, 60)).value == pytest.approx(4.5, rel=0.02)

    def test_sandwich(self, glued):
        assert glued.extras["sandwich_violation"] < 1e-3

    def test_profile_convergence(self, glued):
        s = glued.snapshot(50.0)
        d, _ = D.profile_distance(s, D.locate_front(s), waves.cached_profile(homogeneous(2.0), 4.5))
        assert d < 0.02

    def test_degenerate(self, ramp_front):
        tr = C.glued_front(RAMP, 0.5, 0.5, 60.0, SMALL)
        for w in ((-50, -20), (20, 60)):
            a = D.estimate_speed(tr, w).value
            b = D.estimate_speed(ramp_front, w).value
            assert a == pytest.approx(b, rel=0.005)

    def test_rejects_wrong_order(self):
        with pytest.raises(ValueError):
            C.glued_front(RAMP, 0.5, 0.8, 60.0)


class TestCritical:
    def test_autonomous_log_corrected(self):
        run = C.RunParams(width=600.0)
        tr = C.critical_front(logistic(1.0), 1.0, run, t_end=200.0)
        est = D.estimate_speed(tr, (50, 200), D.LOG_CORRECTED)
        assert est.value == pytest.approx(2.0, rel=0.01)
        s = tr.snapshot(150.0)
        lam = D.estimate_decay(s, D.locate_front(s), critical_flag=True)
        assert 0.9 <= lam.lambda_hat <= 1.05

    def test_speeds(self):
        assert C.critical_speeds(1.0, 4.0) == (2.0, 5.0)
        assert C.critical_speeds(4.0, 1.0) == (4.0, 2.0)


@pytest.fixture(scope="module")
def bc():
    f = separable(tanh_profile(4.0, 1.0, 2.0))
    return C.bc_front(f, 1.2, 150.0, C.RunParams(width=600.0, snapshot_every=25.0))


class TestBcSegment:
    def test_past_speed(self, bc):
        assert D.estimate_speed(bc, (-120, -30)).value == pytest.approx(1.2 + 4 / 1.2, rel=0.02)

    def test_future_speed(self, bc):
        est = D.estimate_speed(bc, (40, 150), D.LOG_CORRECTED)
        assert est.value == pytest.approx(2.0, rel=0.03)

    def test_monotone(self, bc):
        for s in bc.snapshots:
            assert np.max(np.diff(s.values)) <= 1e-12

    def test_requirements(self):
        with pytest.raises(ValueError):
            C.bc_front(RAMP, 1.2, 10.0)


class TestTwoSpeed:
    def test_speeds(self, two_speed):
        assert D.estimate_speed(two_speed, (-50, -20)).value == pytest.approx(2.5, rel=0.02)
        assert D.estimate_speed(two_speed, (20, 50)).value == pytest.approx(3.0, rel=0.02)

    def test_profile_convergence(self, two_speed):
        s = two_speed.snapshot(50.0)
        d, _ = D.profile_distance(s, D.locate_front(s), waves.cached_profile(homogeneous(1.0), 3.0))
        assert d < 0.02

    def test_envelopes(self, two_speed):
        g = homogeneous(1.0)
        for s in two_speed.snapshots[::3]:
            lo, hi = waves.umu_envelopes(two_speed.extras["measure"], two_speed.extras["profiles"],
                                         g, s.time, s.grid.x)
            assert np.max(lo - s.values) < 1e-3
            assert np.max(s.values - np.minimum(hi, 1.0)) < 1e-3

    def test_steepness(self, two_speed):
        p = waves.cached_profile(homogeneous(1.0), 3.0)
        rng = np.random.default_rng(0)
        worst = 0.0
        for s in two_speed.snapshots[2:-2]:
            X = D.locate_front(s)
            y = X + rng.uniform(-5, 5)
            anchor = float(s.at(y))
            x = np.linspace(-20, 20, 81)
            env = waves.steepness_envelope(p, anchor, x)
            u = s.at(y + x)
            worst = max(worst, np.max(np.where(x <= 0, env - u, u - env)))
        assert worst < 1e-3

    def test_no_global_mean_speed(self, two_speed):
        devs = [max(D.global_mean_speed_profile(two_speed, tau)[:2]) for tau in (10.0, 30.0)]
        assert min(devs) > 0.1


def test_global_mean_speed_when_limits_allow(autonomous_front):
    # mu_+ = mu_- with c_- = c_+ = 2.5: a global mean speed exists
    sup_dev, inf_dev, gamma = D.global_mean_speed_profile(autonomous_front, 40.0)
    assert gamma == pytest.approx(2.5, rel=0.01)
    assert max(sup_dev, inf_dev) < 0.05 * gamma


def test_spreading_small():
    run = C.RunParams(width=300.0, scheme=SchemeParams(boundary_left=0.0, recenter_margin=30.0))
    tr = C.spreading_front(logistic(1.0), 40.0, 10.0, run)
    assert 1.6 < tr.position(40.0) / 40.0 < 2.0


def test_build_dispatch():
    spec = C.ConstructionSpec("Supercritical", {"kappa": 0.5}, 5.0, SMALL)
    tr = C.build(spec, logistic(1.0))
    assert tr.metadata["recipe"] == "Supercritical"
    with pytest.raises(ValueError):
        C.ConstructionSpec("Nope", {}, 5.0)
