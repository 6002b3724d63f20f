import math

import numpy as np
import pytest

from kppfronts import model
from kppfronts.model import (HypothesisError, IntegrabilityError, KppNonlinearity, constant_profile,
                             logistic, mu_of_t, separable, tanh_profile, theta_envelope,
                             validate_kpp)


def _custom(ev, mu_minus=1.0, mu_plus=1.0):
    return KppNonlinearity(eval=ev, f_minus=lambda u: u * (1 - u), f_plus=lambda u: u * (1 - u),
                           mu_minus=mu_minus, mu_plus=mu_plus)


class TestValidate:
    def test_tanh_logistic_passes(self):
        f = separable(tanh_profile(1.0, 2.0, 1.0))
        rep = validate_kpp(f)
        assert rep.passed
        for c in rep.checks:
            assert c.violation <= 1e-12, c

    def test_u_squared_is_not_kpp(self):
        f = _custom(lambda t, u: np.asarray(u) ** 2 * (1 - np.asarray(u)))
        rep = validate_kpp(f)
        assert not rep.passed
        c = rep["f(t,u)/u nonincreasing"]
        assert not c.passed and c.violation > 0

    def test_unbounded_coefficient_has_no_limits(self):
        f = _custom(lambda t, u: (1 + t * t) * np.asarray(u) * (1 - np.asarray(u)))
        rep = validate_kpp(f)
        assert not rep["f/f_pm -> 1 at extreme t"].passed

    def test_rejects_nonpositive_u_samples(self):
        with pytest.raises(ValueError):
            validate_kpp(logistic(), u_samples=[0.0, 0.5])

    def test_summary_lists_every_check(self):
        rep = validate_kpp(logistic())
        assert len(rep.summary().splitlines()) == len(rep.checks)


class TestMu:
    f = separable(tanh_profile(1.0, 2.0, 1.0))

    def test_limits(self):
        assert self.f.mu_minus == 1.0 and self.f.mu_plus == 2.0
        assert mu_of_t(self.f, -40.0) == pytest.approx(1.0, abs=1e-12)
        assert mu_of_t(self.f, 40.0) == pytest.approx(2.0, abs=1e-12)

    def test_midpoint(self):
        assert mu_of_t(self.f, 0.0) == pytest.approx(1.5, abs=1e-14)

    def test_autonomous(self):
        for t in (-3.0, 0.0, 7.0):
            assert mu_of_t(logistic(), t) == pytest.approx(1.0, abs=1e-14)

    def test_finite_difference_path(self):
        # no closed form supplied: the derivative comes from differences
        g = _custom(lambda t, u: (1.5 + 0.5 * math.tanh(t)) * np.asarray(u) * (1 - np.asarray(u)),
                    1.0, 2.0)
        for t in (-2.0, 0.0, 0.7):
            assert mu_of_t(g, t) == pytest.approx(1.5 + 0.5 * math.tanh(t), abs=1e-8)

    def test_nonpositive_limits_rejected(self):
        with pytest.raises(HypothesisError):
            _custom(lambda t, u: u, mu_minus=0.0)


class TestTheta:
    def test_exponential(self):
        z = lambda t: 0.2 * math.exp(t) if t <= 0 else 0.2  # noqa: E731
        env = theta_envelope(z, [-5.0, -1.0, 0.0])
        assert env.values[-1] == pytest.approx(0.2, abs=1e-8)
        assert env(-1.0) == pytest.approx(0.2 * math.exp(-1.0), abs=1e-8)
        assert env.tail_monotone

    def test_zero(self):
        env = theta_envelope(lambda t: 0.0, np.linspace(-10, 10, 5))
        assert np.all(env.values == 0.0)
        assert env.theta_infinity == 0.0

    def test_lorentzian_matches_arctan(self):
        env = theta_envelope(lambda t: 1.0 / (1.0 + t * t), [-3.0, 0.0, 2.0])
        for t, v in zip(env.t_grid, env.values):
            assert v == pytest.approx(math.atan(t) + math.pi / 2, abs=1e-6)

    def test_values_nondecreasing(self):
        env = theta_envelope(lambda t: math.exp(-abs(t)), np.linspace(-20, 20, 41))
        assert np.all(np.diff(env.values) >= 0)
        assert env(0.5) == pytest.approx(1.0 + (1 - math.exp(-0.5)), abs=1e-8)

    def test_nonintegrable_tail(self):
        with pytest.raises(IntegrabilityError):
            theta_envelope(lambda t: 1.0, [0.0])


class TestTimeChange:
    def test_constant_sigma(self):
        d = model.constant_diffusivity(2.0)
        g = model.time_change(logistic(1.0), d)
        u = np.linspace(0.1, 0.9, 5)
        assert np.allclose(g(3.0, u), u * (1 - u) / 2)
        assert g.mu_minus == 0.5 and g.mu_plus == 0.5
        assert d.tau(1.7) == pytest.approx(3.4)

    def test_identity(self):
        d = model.constant_diffusivity(1.0)
        f = separable(tanh_profile(1.0, 2.0))
        g = model.time_change(f, d)
        u = np.linspace(0.05, 0.95, 7)
        for t in (-2.0, 0.3, 4.0):
            assert np.allclose(g(t, u), f(t, u), rtol=0, atol=1e-15)

    def test_tanh_limits(self):
        d = model.tanh_diffusivity(0.5, 2.0, 1.0)
        g = model.time_change(logistic(1.0), d)
        assert g.mu_minus == pytest.approx(2.0) and g.mu_plus == pytest.approx(0.5)
        # slopes at |t| = 50 in the original clock
        assert mu_of_t(g, d.tau(-50.0)) == pytest.approx(2.0, rel=1e-10)
        assert mu_of_t(g, d.tau(50.0)) == pytest.approx(0.5, rel=1e-10)

    def test_tau_closed_form_matches_quadrature(self):
        d = model.tanh_diffusivity(0.5, 2.0, 1.0)
        q = model.diffusivity_from_sigma(d.sigma, 0.5, 2.0, 0.5)
        for t in (-7.0, -0.3, 0.0, 2.5, 11.0):
            assert d.tau(t) == pytest.approx(q.tau(t), abs=1e-10)
            assert d.tau_inverse(d.tau(t)) == pytest.approx(t, abs=1e-9)


class TestProfiles:
    def test_flat_profile_is_c1(self):
        p = model.flat_profile(1.0, 3.0, -1.0, 1.0)
        assert p.fn(-5) == 1.0 and p.fn(5) == 3.0
        h = 1e-6
        for t0 in (-1.0, 1.0):
            left = (p.fn(t0) - p.fn(t0 - h)) / h
            right = (p.fn(t0 + h) - p.fn(t0)) / h
            assert abs(left - right) < 1e-4

    def test_concave_family(self):
        f = separable(constant_profile(1.0), b=-0.5)
        assert validate_kpp(f).passed
        with pytest.raises(ValueError):
            separable(constant_profile(1.0), b=0.5)

    def test_symmetrized_limits(self):
        f = separable(tanh_profile(1.0, 2.0)).symmetrized()
        assert f.mu_plus == 1.0
        assert mu_of_t(f, 30.0) == pytest.approx(1.0, abs=1e-12)
