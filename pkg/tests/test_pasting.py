import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acboundary.geometry import Geometry
from acboundary.pasting import (amplitude_sweep, match_sphere, neumann_mismatch,
                                perturbed_normal, projection, projection_test)
from acboundary.minimizer import two_sided_paste
from acboundary.profiles import SIGMA0
from oracles import circle_graph_normal

M = 256
THETA = 2 * np.pi * np.arange(M) / M


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.lists(st.floats(-1e-2, 1e-2), min_size=3, max_size=3),
       st.floats(0.0, 0.05))
def test_normal_matches_euclidean_circle_oracle(R, coef, mean):
    eta = lambda th: mean + sum(c * np.cos((k + 1) * th) for k, c in enumerate(coef))
    deta = lambda th: -sum((k + 1) * c * np.sin((k + 1) * th) for k, c in enumerate(coef))
    out = perturbed_normal(eta(THETA), Geometry.disk(R))
    a_t, a_s = circle_graph_normal(R, eta, deta, THETA)
    assert np.max(np.abs(out["a_t"] - a_t)) < 1e-12
    assert np.max(np.abs(out["a_s"] - a_s)) < 1e-12


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_amplitude_slopes(mode):
    r = amplitude_sweep(Geometry.disk(1.0), mode=mode)
    assert r["slope_a_t"] == pytest.approx(2.0, abs=0.1)
    assert r["slope_a_s"] == pytest.approx(1.0, abs=0.05)


def test_normal_rejects_graph_outside_collar():
    with pytest.raises(ValueError):
        perturbed_normal(0.6 * np.ones(M), Geometry.disk(1.0))


def test_flat_graph_has_unit_normal():
    out = perturbed_normal(np.full(M, 0.1), Geometry.disk(1.0))
    assert out["a_t_minus_1"] < 1e-15 and out["a_s_norm"] < 1e-15


def test_mismatch_symmetry_and_signs():
    eps = 0.05
    lo, hi = neumann_mismatch(2, eps, 0.05), neumann_mismatch(2, eps, 0.95)
    assert lo["C_plus"] < 0 < hi["C_plus"]
    assert lo["literal_plus"] == -lo["C_plus"]
    for r in (lo, hi, neumann_mismatch(2, eps, 0.4)):
        assert abs(r["C_plus"] + r["C_minus"]) <= 1e-8


def test_mismatch_monotone_where_both_sides_nontrivial():
    eps = 0.05
    rows = [neumann_mismatch(2, eps, tau) for tau in np.linspace(0.15, 0.9, 7)]
    assert not any(r["band_trivial"] or r["cap_trivial"] for r in rows)
    c = [r["C_plus"] for r in rows]
    assert np.all(np.diff(c) > 0)


def test_match_sphere():
    res = match_sphere(2, 0.05)
    assert abs(res.C_plus) <= 1e-8
    assert abs(res.C_minus + res.C_plus) <= 1e-8
    assert res.endpoints["lo"]["C_plus"] < 0 < res.endpoints["hi"]["C_plus"]
    taus = [h[0] for h in res.history]
    widths = np.abs(np.diff(taus))
    assert np.allclose(widths[1:] / widths[:-1], 0.5)
    fine = match_sphere(2, 0.05, divisor=80)
    assert abs(fine.tau_star - res.tau_star) <= 1e-4


def test_match_sphere_validation():
    with pytest.raises(ValueError):
        match_sphere(4, 0.05)
    with pytest.raises(ValueError):
        match_sphere(2, 0.2)


def test_projection_zero_case_exact():
    out = projection_test(Geometry.slab(1.0), 0.05, amps=[0.0])
    assert out["records"][0].projection == 0.0


def test_projection_linear_and_constant():
    eps = 0.025
    out = projection_test(Geometry.slab(1.0), eps)
    assert out["ratio"] == pytest.approx(2.0, rel=0.01)
    assert out["winner"] == "2sigma0"
    assert out["sign"] == -1
    assert abs(out["constant"]) == pytest.approx(2 * SIGMA0, rel=0.02)
    for r in out["records"]:
        rel = abs(r.projection - r.projection_plain_gdot) / abs(r.projection)
        assert rel <= eps**5


def test_projection_rejects_non_c1_paste():
    with pytest.raises(ValueError, match="jump"):
        projection_test(Geometry.slab(1.0), 0.05, jump_tol=1e-12)
    with pytest.raises(ValueError):
        projection_test(Geometry.disk(1.0), 0.05)
    with pytest.raises(ValueError):
        projection_test(Geometry.slab(1.0), 0.1)


def test_projection_of_shifted_paste_is_odd_in_eta():
    eps = 0.05
    slab = Geometry.slab(1.0)
    p = projection(two_sided_paste(slab, 1e-3, eps))
    m = projection(two_sided_paste(slab, -1e-3, eps))
    assert p == pytest.approx(-m, rel=1e-9)
