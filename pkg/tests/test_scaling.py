"""Size sweeps, power-law fits, and the growth-exponent report."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from macroent.optimize import OptimizerConfig
from macroent.scaling import (
    SweepPoint,
    canonical_value,
    fit_index,
    running_slopes,
    secant_slopes,
    sweep,
)
from macroent.states import make_cat, resolve_state

_FAST = OptimizerConfig(restarts=3, max_iters=80, seed=0)


def _points(ns, values):
    return [SweepPoint(n=n, raw_value=v, effective_value=max(v, float(n)),
                       seed=0, restarts=0, wall_time_s=0.0)
            for n, v in zip(ns, values)]


def test_fit_recovers_exact_power_law():
    ns = [4, 8, 16, 32]
    pts = _points(ns, [3.0 * n**1.7 for n in ns])
    fit = fit_index(pts)
    assert fit.slope == pytest.approx(1.7, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)


def test_fit_scale_equivariance():
    ns = [4, 6, 8, 10, 12]
    values = [2.3 * n**1.4 + 0.2 * n for n in ns]
    base = fit_index(_points(ns, values))
    scaled = fit_index(_points(ns, [17.0 * v for v in values]))
    assert scaled.slope == pytest.approx(base.slope, abs=1e-12)
    assert scaled.intercept != pytest.approx(base.intercept)


def test_floored_data_has_slope_exactly_one():
    ns = [4, 6, 8, 10]
    pts = _points(ns, [0.0] * len(ns))  # raw zero floors to n everywhere
    fit = fit_index(pts)
    assert fit.slope == pytest.approx(1.0, abs=1e-12)


def test_slope_lies_between_extreme_secants():
    rng = np.random.default_rng(3)
    ns = [4, 6, 8, 10, 12, 14]
    values = [n ** (1.5 + 0.3 * rng.uniform(-1, 1)) for n in ns]
    values = np.maximum.accumulate(values)  # monotone data
    pts = _points(ns, list(values))
    fit = fit_index(pts)
    secs = secant_slopes(pts)
    assert min(secs) - 1e-12 <= fit.slope <= max(secs) + 1e-12


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_index(_points([4, 6], [10.0, 20.0]))


def test_running_slopes_prefix():
    pts = _points([4, 6, 8, 10], [16.0, 36.0, 64.0, 100.0])
    running = running_slopes(pts)
    assert math.isnan(running[0]) and math.isnan(running[1])
    assert running[2] == pytest.approx(2.0, abs=1e-9)
    assert running[3] == pytest.approx(2.0, abs=1e-9)


def test_sweep_canonical_cat():
    pts = sweep("cat", [4, 6, 8], mode="canonical")
    for p in pts:
        assert p.ok
        assert p.raw_value == pytest.approx(2 * p.n**2, rel=1e-9)
        assert p.restarts == 0
    fit = fit_index(pts)
    assert fit.slope == pytest.approx(2.0, abs=1e-3)


def test_sweep_optimized_mode_records_restarts():
    pts = sweep("ex1", [4, 5], cfg=_FAST, mode="optimized")
    assert all(p.restarts == _FAST.restarts for p in pts)
    assert all(p.seed == _FAST.seed for p in pts)


def test_sweep_variance_mode():
    pts = sweep("cat", [4, 6], cfg=_FAST, mode="variance")
    for p in pts:
        assert p.raw_value == pytest.approx(p.n**2, rel=1e-6)


def test_sweep_effective_floor():
    pts = sweep("ex1", [4, 6, 8], mode="canonical")
    for p in pts:
        assert p.raw_value == 0.0
        assert p.effective_value == float(p.n)


def test_sweep_skips_oversize_points():
    pts = sweep("cat", [4, 6, 8, 24], mode="canonical")
    assert [p.ok for p in pts] == [True, True, True, False]
    assert "22" in pts[3].error  # names the capacity limit
    assert math.isnan(pts[3].raw_value)
    fit = fit_index(pts)  # errored point drops out of the regression
    assert len(fit.points) == 3
    assert fit.slope == pytest.approx(2.0, abs=1e-3)


def test_sweep_rejects_bad_requests():
    with pytest.raises(ValueError):
        sweep("cat", [4, 6], mode="nope")
    with pytest.raises(ValueError):
        sweep("nope", [4, 6])
    with pytest.raises(ValueError):
        sweep("cat", [6, 4])
    with pytest.raises(ValueError):
        sweep("cat", [4, 4, 6])


def test_canonical_value_dispatch():
    assert canonical_value(make_cat(6), False) == pytest.approx(72.0, rel=1e-9)
    ex2 = resolve_state("ex2", 6)
    assert canonical_value(ex2, True) == pytest.approx(32.0, rel=1e-9)


def test_sweep_point_immutable():
    p = SweepPoint(n=4, raw_value=1.0, effective_value=4.0, seed=0, restarts=0,
                   wall_time_s=0.0)
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.n = 5
