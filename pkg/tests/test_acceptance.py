"""Acceptance criteria, each evaluated through the shipped preset configurations."""
import dataclasses
import time

import pytest

from conftest import ACCEPTANCE_LINES
from kppfronts import cli
from kppfronts.config import load_config
from kppfronts.speedset import nr1_future_speed

_ARCHIVES = {}


def _archive(preset):
    if preset not in _ARCHIVES:
        cfg = load_config(preset)
        cfg = dataclasses.replace(cfg, sensitivity={"start_time": False, "refinement": False})
        t0 = time.perf_counter()
        arch = cli.run_scenario(cfg)
        arch.timings["wall"] = time.perf_counter() - t0
        _ARCHIVES[preset] = arch
    return _ARCHIVES[preset]


def _check(criterion, presets, max_seconds=None):
    verdicts, wall = [], 0.0
    for p in presets:
        arch = _archive(p)
        assert arch.error is None, arch.error
        verdicts += [v for v in arch.verdicts if v.criterion == criterion]
        wall += arch.timings["wall"]
    ok = bool(verdicts) and all(v.passed for v in verdicts)
    if max_seconds is not None:
        ok = ok and wall <= max_seconds
    detail = "; ".join(f"{v.name}={v.value:.6g} ({v.target})" for v in verdicts)
    line = f"{criterion:<5s} {'PASS' if ok else 'FAIL'}  {detail}  [{wall:.1f} s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert verdicts, f"no verdicts for {criterion}"
    assert ok, line


def test_ac01_supercritical_speed():
    _check("AC1", ["ac01"])


def test_ac02_past_future_speeds():
    _check("AC2", ["ac02"])


def test_ac03_nr1_cross_check():
    assert nr1_future_speed(2.5, 1.0, 2.0) == pytest.approx(4.5, abs=1e-12)
    _check("AC3", ["ac03"])


def test_ac04_spreading_speed():
    _check("AC4", ["ac04"], max_seconds=300)


def test_ac05_decay_rate():
    _check("AC5", ["ac05"])


def test_ac06_profile_convergence():
    _check("AC6", ["ac06"])


def test_ac07_two_speed_front():
    _check("AC7", ["ac07"])


def test_ac08_sandwich():
    _check("AC8", ["ac08"])


def test_ac09_speedset():
    _check("AC9", ["ac09"], max_seconds=1.0)


def test_ac10_diffusivity():
    _check("AC10", ["ac10"])


def test_ac11_comparison():
    _check("AC11", ["ac11"])


def test_ac12_refinement():
    _check("AC12", ["ac01", "ac12"])


@pytest.mark.slow
def test_ac13_critical_future_speed():
    _check("AC13", ["ac13"], max_seconds=600)
