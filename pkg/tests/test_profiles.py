import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acboundary.mesh import Grid
from acboundary.profiles import (KAPPA0, SIGMA, SIGMA0, CutoffProfile, ToleranceNotReached,
                                 W, compute_constants, cutoff_scale, d2W, dW,
                                 eval_heteroclinic, residual_R_omega, smooth_cutoff)
from oracles import mp_integrals, mp_tanh_profile


def test_heteroclinic_examples():
    assert eval_heteroclinic(0.0, 0) == 0.0
    assert eval_heteroclinic(0.0, 1) == pytest.approx(0.7071067811865476, abs=2.3e-16)
    v = eval_heteroclinic(10.0, 0)
    assert 1 - 1e-5 < v < 1
    assert v == pytest.approx(float(mp_tanh_profile(10.0)), abs=1e-16)


@settings(max_examples=60, deadline=None)
@given(st.floats(-30, 30))
def test_heteroclinic_solves_the_ode(t):
    g, g2 = eval_heteroclinic(t, 0), eval_heteroclinic(t, 2)
    assert abs(g2 - dW(g)) <= 10 * np.finfo(float).eps * 2
    assert eval_heteroclinic(t, 1) > 0


@settings(max_examples=40, deadline=None)
@given(st.floats(-8, 8))
def test_heteroclinic_derivatives_match_differences(t):
    h = 1e-5
    for k in range(3):
        fd = (eval_heteroclinic(t + h, k) - eval_heteroclinic(t - h, k)) / (2 * h)
        assert fd == pytest.approx(eval_heteroclinic(t, k + 1), abs=1e-8)


def test_potential():
    assert W(0.0) == 0.25
    assert W(1.0) == W(-1.0) == 0.0
    assert dW(1.0) == 0.0 and d2W(1.0) == 2.0


def test_cutoff_examples():
    assert smooth_cutoff(0.5) == 0.0
    assert smooth_cutoff(3.0) == 1.0
    assert smooth_cutoff(1.5) == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_cutoff_monotone(a, b):
    lo, hi = sorted((a, b))
    assert smooth_cutoff(lo) <= smooth_cutoff(hi)


def test_constants_closed_forms():
    t0 = time.perf_counter()
    c = compute_constants(1e-12)
    assert time.perf_counter() - t0 < 1.0
    assert c.sigma0 == pytest.approx(math.sqrt(2) / 3, abs=1e-12)
    assert c.kappa0 == pytest.approx((4 * math.log(2) - 1) / 6, abs=1e-12)
    assert c.sigma == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    s0, k0 = mp_integrals()
    assert c.sigma0 == pytest.approx(s0, abs=1e-12)
    assert c.kappa0 == pytest.approx(k0, abs=1e-12)
    assert (SIGMA0, KAPPA0, SIGMA) == pytest.approx((s0, k0, 1 / math.sqrt(2)), abs=1e-14)


def test_constants_tolerance_errors():
    with pytest.raises(ValueError):
        compute_constants(0.0)
    with pytest.raises(ToleranceNotReached):
        compute_constants(1e-30)


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.025])
def test_gbar_regions(eps):
    p = CutoffProfile(eps, 6.0)
    lam = cutoff_scale(eps, 6.0)
    s = np.linspace(0, lam, 200)
    assert np.array_equal(p(s), eval_heteroclinic(s))
    s = np.linspace(2 * lam, 3 * lam, 50)
    assert np.all(p(s) == 1.0)
    s = np.linspace(0, 3 * lam, 4000)
    assert np.all(np.diff(p(s)) >= -1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.02, 0.2), st.floats(0.05, 2.5), st.sampled_from([None, "w"]))
def test_cutoff_profile_derivatives(eps, frac, base):
    b = None if base is None else (lambda s, k=0: np.asarray(eval_heteroclinic(s, k + 1)))
    p = CutoffProfile(eps, 6.0, base=b)
    s = frac * p.lam
    h = 1e-5 * p.lam
    for k in (0, 1):
        fd = (p(s + h, k) - p(s - h, k)) / (2 * h)
        assert fd == pytest.approx(p(s, k + 1), abs=1e-6)


def test_cutoff_profile_rejects_bad_parameters():
    with pytest.raises(ValueError):
        CutoffProfile(0.1, 5.0)
    with pytest.raises(ValueError):
        CutoffProfile(1.0, 6.0)


def test_residual_examples():
    eps = 0.1
    grid = Grid(0.0, 3.0, 3000)
    R = residual_R_omega(eps, 6.0, grid)
    i = int(np.argmin(abs(grid.t - 0.01)))
    assert R.values[i] == 0.0
    assert np.max(np.abs(R.values)) <= R.meta["C"] * eps**6 * (1 + 1e-12)
    R2 = residual_R_omega(0.05, 6.0, Grid(0.0, 4.0, 4000))
    j = int(np.argmin(abs(R2.grid.t - 3.0)))
    assert R2.values[j] == 0.0


def test_residual_support_and_size_over_sweep():
    cs = []
    for eps in (0.1, 0.05, 0.025):
        lo = -6 * eps * math.log(eps)
        grid = Grid(0.0, 3 * lo, 6000)
        R = residual_R_omega(eps, 6.0, grid)
        nz = grid.t[R.values != 0]
        assert nz.min() >= lo * (1 - 1e-12) and nz.max() <= 2 * lo * (1 + 1e-12)
        cs.append(R.meta["C"])
    # O(eps^omega) with a constant that does not grow along the sweep
    assert cs[2] <= cs[1] <= cs[0] < 1e-3
