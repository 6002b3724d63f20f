import math

import numpy as np
import pytest

from kppfronts import waves
from kppfronts.model import homogeneous, logistic, separable, tanh_profile
from kppfronts.solver import (FieldState, FrontLostError, Grid1D, SchemeParams, comparison_violation,
                              evolve, recenter, rightmost_crossing, step)


def test_grid_basics():
    g = Grid1D.centered(0.0, 10.0, 0.5)
    assert g.n_points == 21
    assert g.x[0] == -5.0 and g.x_right == 5.0
    assert np.allclose(g.shifted(3).x, g.x + 1.5)


def test_field_state_is_a_readonly_copy():
    g = Grid1D(0.0, 1.0, 5)
    v = np.ones(5)
    s = FieldState(0.0, g, v)
    v[0] = 7.0
    assert s.values[0] == 1.0
    with pytest.raises(ValueError):
        s.values[0] = 2.0


def test_scheme_params_validation():
    with pytest.raises(ValueError):
        SchemeParams(dt=-1.0)
    with pytest.raises(ValueError):
        SchemeParams(diffusion_weight=0.2)


def test_zero_stays_zero():
    g = Grid1D(0.0, 0.1, 201)
    s = FieldState(0.0, g, np.zeros(g.n_points))
    p = SchemeParams(boundary_left=0.0)
    for _ in range(50):
        s = step(s, logistic(), None, p)
    assert np.all(s.values == 0.0)


def test_one_stays_one():
    g = Grid1D(0.0, 0.1, 201)
    s = FieldState(0.0, g, np.ones(g.n_points))
    p = SchemeParams(boundary_left=1.0, boundary_right=1.0)
    for _ in range(50):
        s = step(s, logistic(), None, p)
    # the linear solve reproduces 1 up to roundoff
    assert np.max(np.abs(s.values - 1.0)) < 1e-13


def test_uniform_interior_follows_logistic_ode():
    g = Grid1D(-100.0, 0.1, 2001)
    p = SchemeParams(dt=0.01, boundary_left=0.5, boundary_right=0.5)
    s = FieldState(0.0, g, np.full(g.n_points, 0.5))
    for _ in range(100):
        s = step(s, logistic(), None, p)
    exact = 0.5 * math.e / (0.5 + 0.5 * math.e)
    assert s.values[1000] == pytest.approx(exact, abs=1e-4)


def test_evolve_zero_steps():
    g = Grid1D(-10.0, 0.1, 201)
    u0 = (g.x < 0).astype(float)
    tr = evolve(FieldState(1.0, g, u0), logistic(), None, SchemeParams(), 1.0)
    assert len(tr.snapshots) == 1
    assert tr.times.tolist() == [1.0]


def test_traveling_wave_is_translated():
    prof = waves.compute_profile(homogeneous(1.0), 2.5)
    g = Grid1D(-100.0, 0.05, 8001)
    tr = evolve(FieldState(0.0, g, prof(g.x)), logistic(), None, SchemeParams(dt=0.005), 10.0,
                recentering=False)
    s = tr.snapshots[-1]
    assert np.max(np.abs(s.values - prof(g.x - 25.0))) < 5e-3


def test_monotone_data_stay_monotone():
    g = Grid1D(-50.0, 0.05, 4001)
    u0 = 0.5 * (1 - np.tanh(g.x))
    f = separable(tanh_profile(1.0, 2.0, 2.0))
    tr = evolve(FieldState(-5.0, g, u0), f, None, SchemeParams(), 5.0,
                snapshot_times=np.arange(-4.0, 5.0, 1.0))
    assert len(tr.snapshots) >= 10
    for s in tr.snapshots:
        assert np.all(np.diff(s.values) <= 1e-12)


def test_recenter_identities():
    g = Grid1D(0.0, 1.0, 11)
    u = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0], dtype=float)
    s = FieldState(0.0, g, u)
    same = recenter(s, 5.0)
    assert np.array_equal(same.values, u) and same.grid == g
    right = recenter(s, 7.0)            # window moves right by two cells
    assert right.grid.x_left == 2.0
    assert np.array_equal(right.values, np.concatenate([u[2:], [0.0, 0.0]]))
    back = recenter(right, 5.0)
    assert back.grid == g
    assert np.array_equal(back.values[:9], u[:9])
    left = recenter(s, 2.0)
    assert np.array_equal(left.values[:3], [1.0, 1.0, 1.0])


def test_rightmost_crossing():
    u = np.array([1.0, 1.0, 0.0, 0.0])
    assert rightmost_crossing(u, 0.0, 0.5, 0.5) == pytest.approx(0.75)
    assert math.isnan(rightmost_crossing(np.zeros(4), 0.0, 1.0, 0.5))


def test_front_lost_raises():
    g = Grid1D(-10.0, 0.1, 201)
    with pytest.raises(FrontLostError):
        evolve(FieldState(0.0, g, np.zeros(g.n_points)), logistic(), None,
               SchemeParams(boundary_left=0.0), 1.0)


def test_recentering_keeps_positions_continuous():
    g = Grid1D(-30.0, 0.05, 1201)
    u0 = (g.x < 0).astype(float)
    p = SchemeParams(recenter_margin=10.0, recenter_anchor=0.25, max_drift=5.0)
    tr = evolve(FieldState(0.0, g, u0), logistic(), None, p, 20.0)
    assert tr.snapshots[-1].grid.x_left > g.x_left
    assert np.max(np.abs(np.diff(tr.X))) < 0.1


def test_comparison_small():
    g = Grid1D(-20.0, 0.05, 801)
    v = comparison_violation(separable(tanh_profile(1.0, 2.0)), SchemeParams(), g, n_pairs=5,
                             n_steps=100, seed=3, t0=-0.5)
    assert v <= 1e-12


def test_csv_outputs(tmp_path):
    g = Grid1D(-10.0, 0.5, 41)
    tr = evolve(FieldState(0.0, g, (g.x < 0).astype(float)), logistic(), None, SchemeParams(), 0.1)
    tr.positions_csv(tmp_path / "p.csv")
    tr.snapshots[-1].to_csv(tmp_path / "s.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,X"
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,x,u" and len(lines) == 42
