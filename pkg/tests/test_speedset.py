import math

import numpy as np
import pytest

from kppfronts import speedset as ss
from kppfronts.speedset import DecayPair, SpeedPair


class TestKappaFromCminus:
    @pytest.mark.parametrize("c,mm,mp,k,cp", [(2, 1, 1, 1, 2), (2, 1, 4, 1, 5), (4, 4, 1, 1, 2)])
    def test_examples(self, c, mm, mp, k, cp):
        assert ss.kappa_from_cminus(c, mm, mp) == pytest.approx(k, abs=1e-12)
        assert ss.min_future_speed(c, mm, mp) == pytest.approx(cp, abs=1e-12)

    def test_minimal_future_speed_exceeds_critical(self):
        assert ss.min_future_speed(2.0, 1.0, 4.0) > 2.0 * math.sqrt(4.0)

    def test_below_threshold(self):
        with pytest.raises(ValueError):
            ss.kappa_from_cminus(1.5, 1.0, 1.0)


class TestSpeedsFromDecays:
    def test_corner(self):
        p = ss.speeds_from_decays(DecayPair(1.0, 1.0), 1.0, 1.0)
        assert (p.c_minus, p.c_plus) == pytest.approx((2.0, 2.0))

    def test_example(self):
        p = ss.speeds_from_decays(DecayPair(0.8, 0.5), 1.0, 2.0)
        assert (p.c_minus, p.c_plus) == pytest.approx((2.05, 4.5))

    def test_rejects_increasing_decay(self):
        with pytest.raises(ValueError, match="K"):
            ss.speeds_from_decays(DecayPair(0.5, 0.8), 1.0, 2.0)
        assert not DecayPair(0.5, 0.8).in_K(1.0, 2.0)
        assert DecayPair(0.5, 0.8).violations(1.0, 2.0)


class TestAdmissible:
    def test_no_deceleration_for_equal_limits(self):
        assert not ss.admissible(SpeedPair(2.5, 2.4), 1.0, 1.0)

    def test_deceleration_allowed(self):
        a = ss.admissible(SpeedPair(1.2 + 4.0 / 1.2, 2.0), 4.0, 1.0)
        assert a
        assert a.witness.kappa_plus == pytest.approx(1.0, abs=1e-12)

    def test_future_speed_too_small(self):
        a = ss.admissible(SpeedPair(2.0, 4.5), 1.0, 4.0)
        assert not a
        assert a.min_c_plus == pytest.approx(5.0)

    def test_round_trip_sweep(self):
        rng = np.random.default_rng(1)
        for mm, mp in [(1, 1), (1, 4), (4, 1), (0.3, 2.7)]:
            for d in ss.sample_K(mm, mp, 200, rng):
                assert d.in_K(mm, mp)
                p = ss.speeds_from_decays(d, mm, mp)
                a = ss.admissible(p, mm, mp)
                assert a
                assert a.witness.kappa_minus == pytest.approx(d.kappa_minus, abs=1e-10)
                assert a.witness.kappa_plus == pytest.approx(d.kappa_plus, abs=1e-10)
                if mp >= mm:
                    assert p.c_plus >= p.c_minus * (1 - 1e-12)


class TestGlobalMean:
    def test_examples(self):
        assert ss.global_mean_admissible(2.0, 1.0, 1.0)
        assert not ss.global_mean_admissible(10.0, 1.0, 1.0001)
        assert not ss.global_mean_admissible(1.9, 1.0, 0.5)


class TestFormulas:
    def test_nr1(self):
        assert ss.nr1_future_speed(2.5, 1.0, 2.0) == pytest.approx(4.5)
        assert ss.nr1_future_speed(3.3, 1.0, 1.0) == pytest.approx(3.3)

    def test_nr1_matches_decay_map(self):
        for c in (2.1, 2.5, 3.0, 4.0):
            for mp in (1.0, 2.0, 3.0):
                k = ss.small_root(c, 1.0)
                if k <= math.sqrt(mp):
                    p = ss.speeds_from_decays(DecayPair(k, k), 1.0, mp)
                    assert ss.nr1_future_speed(c, 1.0, mp) == pytest.approx(p.c_plus, abs=1e-12)

    def test_decay_formula(self):
        assert ss.thmdecay_future_speed(math.sqrt(3.0), 3.0) == pytest.approx(2 * math.sqrt(3.0))
        assert ss.thmdecay_future_speed(0.5, 2.0) == pytest.approx(4.5)
        assert ss.thmdecay_future_speed(10.0, 1.0) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            ss.thmdecay_future_speed(0.0, 1.0)


class TestDiffusivity:
    def test_unit_diffusivity_reduces(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            cm, cp = rng.uniform(1.5, 6.0, 2)
            p = SpeedPair(cm, cp)
            assert bool(ss.sigma_admissible(p, 1.0, 2.0, 1.0, 1.0)) == bool(ss.admissible(p, 1.0, 2.0))

    def test_minimal_past_speed(self):
        assert not ss.sigma_admissible(SpeedPair(1.41, 10.0), 1.0, 1.0, 0.5, 2.0)
        assert ss.sigma_admissible(SpeedPair(2 * math.sqrt(0.5), 10.0), 1.0, 1.0, 0.5, 2.0)

    def test_physical_speeds_consistent(self):
        # decays of the time-changed problem map to admissible physical speeds
        mm, mp, sm, sp = 1.0, 1.0, 0.5, 2.0
        rng = np.random.default_rng(3)
        for d in ss.sample_K(mm / sm, mp / sp, 100, rng):
            p = ss.physical_speeds(d.kappa_minus, d.kappa_plus, mm, mp, sm, sp)
            tilde = ss.speeds_from_decays(d, mm / sm, mp / sp)
            assert p.c_minus / sm == pytest.approx(tilde.c_minus, abs=1e-12)
            assert p.c_plus / sp == pytest.approx(tilde.c_plus, abs=1e-12)
            assert ss.sigma_admissible(p, mm, mp, sm, sp)

    def test_example_speeds(self):
        p = ss.physical_speeds(0.5, 0.5, 1.0, 1.0, 0.5, 2.0)
        assert (p.c_minus, p.c_plus) == pytest.approx((2.25, 3.0))


class TestRegion:
    def test_triangle(self):
        r = ss.region_sample(1.0, 4.0, 50)
        assert r.marks["corner"] == (1.0, 1.0)
        assert np.max(r.kappa_boundary[:, 0]) == pytest.approx(1.0)
        assert np.all(r.kappa_boundary[:, 1] <= r.kappa_boundary[:, 0] + 1e-12)

    def test_trapezoid(self):
        r = ss.region_sample(4.0, 1.0, 50)
        assert r.marks["B"] == (2.0, 1.0) and r.marks["C"] == (1.0, 1.0)
        assert np.max(r.kappa_boundary[:, 1]) == pytest.approx(1.0)

    def test_boundary_speeds_admissible(self):
        for mm, mp in [(1.0, 4.0), (4.0, 1.0)]:
            r = ss.region_sample(mm, mp, 60)
            for cm, cp in r.speed_boundary:
                assert ss.admissible(SpeedPair(cm, cp), mm, mp)

    def test_csv(self, tmp_path):
        r = ss.region_sample(1.0, 2.0, 10)
        r.to_csv(tmp_path / "k.csv", tmp_path / "c.csv")
        assert (tmp_path / "k.csv").read_text().startswith("kappa_minus,kappa_plus")
