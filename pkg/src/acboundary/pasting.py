"""Closed-manifold experiments: Neumann matching on the round sphere,
projection onto the approximate kernel, and the normal of a graph over Y.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import simpson

from .geometry import Geometry
from .mesh import Grid
from .minimizer import SolveConfig, minimize, two_sided_paste
from .neumann import loglog_slope, one_sided_derivative
from .profiles import SIGMA0, CutoffProfile, eval_heteroclinic


class NoSignChange(RuntimeError):
    pass


# Sphere matching -----------------------------------------------------------

def _radial_solve(geom, eps, length, n, newton_tol):
    if length <= 0:
        return None
    grid = Grid(0.0, length, n)
    cfg = SolveConfig(eps, geom, divisor=eps / grid.h, newton_tol=newton_tol, grid=grid)
    return minimize(cfg)


def neumann_mismatch(n: int, eps: float, tau: float, divisor: float = 40.0,
                     newton_tol: float = 1e-11) -> dict:
    """Jumps C^+ (at x_{n+1} = tau) and C^- (at -tau) of the pasted sphere field.

    The caps carry the nonnegative minimizers, the band the nonpositive one
    (minus the band's nonnegative minimizer).  Derivatives are in the
    coordinate x_{n+1}, i.e. d/dtheta divided by cos(theta).

    ``literal_*`` is d_x u_cap - d_x v_band.  ``C_plus``/``C_minus`` use the
    opposite orientation d_x v_band - d_x u_cap, under which C^+ > 0 for
    tau near 1 and C^+ < 0 for tau near 0.  The root is the same.
    """
    theta0 = math.asin(tau)
    n_cap = int(math.ceil(0.5 * math.pi * divisor / eps))
    n_band = int(math.ceil(math.pi * divisor / eps))
    cap = _radial_solve(Geometry.sphere_cap(n, tau), eps, 0.5 * math.pi - theta0, n_cap, newton_tol)
    band = _radial_solve(Geometry.sphere_band(n, tau), eps, 2.0 * theta0, n_band, newton_tol)
    d_cap = one_sided_derivative(cap.u.values, cap.u.grid.h)
    # band variable t = theta0 - theta, v = -V(t), so d_theta v = V'(t)
    V = band.u.values
    hb = band.u.grid.h
    dv_top = one_sided_derivative(V, hb)
    dv_bottom = -one_sided_derivative(V[::-1], hb)
    c = math.cos(theta0)
    # lower cap is the mirror image of the upper one: d_theta u^- (-theta0) = -d_cap
    lit_plus = (d_cap - dv_top) / c
    lit_minus = (-d_cap - dv_bottom) / c
    return {"tau": tau, "C_plus": -lit_plus, "C_minus": -lit_minus,
            "literal_plus": lit_plus, "literal_minus": lit_minus,
            "cap_trivial": cap.trivial, "band_trivial": band.trivial,
            "d_cap": d_cap, "d_band": dv_top}


@dataclass
class MatchResult:
    n: int
    eps: float
    tau_star: float
    iterations: int
    C_plus: float
    C_minus: float
    endpoints: dict
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def match_sphere(n: int = 2, eps: float = 0.05, tol: float = 1e-8, delta: float = 0.02,
                 divisor: float = 40.0, max_iter: int = 200,
                 newton_tol: float = 1e-11) -> MatchResult:
    """Bisection in tau for C^+_{eps,tau} = 0."""
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    if eps > 0.1:
        raise ValueError("eps must be at most 0.1")
    f = lambda tau: neumann_mismatch(n, eps, tau, divisor, newton_tol)
    lo, hi = f(delta), f(1.0 - delta)
    endpoints = {"lo": lo, "hi": hi}
    if np.sign(lo["C_plus"]) == np.sign(hi["C_plus"]):
        raise NoSignChange(f"C+ has the same sign at tau={delta} and tau={1 - delta}")
    a, b = lo, hi
    history = []
    mid = a
    for it in range(1, max_iter + 1):
        tm = 0.5 * (a["tau"] + b["tau"])
        if tm in (a["tau"], b["tau"]):
            break
        mid = f(tm)
        history.append((tm, mid["C_plus"]))
        if abs(mid["C_plus"]) <= tol:
            break
        if np.sign(mid["C_plus"]) == np.sign(a["C_plus"]):
            a = mid
        else:
            b = mid
    return MatchResult(n, eps, mid["tau"], len(history), mid["C_plus"], mid["C_minus"],
                       {k: {kk: v[kk] for kk in ("tau", "C_plus", "literal_plus")}
                        for k, v in endpoints.items()}, history)


# Perturbed normal ----------------------------------------------------------

def perturbed_normal(eta, geom) -> dict:
    """Components of the unit normal to the graph Y_eta = {t = eta(s)}.

    In Fermi coordinates over a curve Y the metric is dt^2 + J(t)^2 ds^2
    (s arclength on Y).  Writing nu_eta = a^t d_t + a^s d_s::

        a^t = J / sqrt(J^2 + eta_s^2),   a^s = -eta_s / (J sqrt(J^2 + eta_s^2))

    with J evaluated at t = eta(s).  ``eta`` holds samples on a uniform
    grid of the angle on Y; derivatives are spectral.
    """
    eta = np.asarray(eta, dtype=float)
    collar = min(geom.focal_distance, geom.domain_length)
    if np.max(np.abs(eta)) >= 0.5 * collar:
        raise ValueError("graph leaves the Fermi collar")
    radius = 1.0 if geom.kind == "slab" else geom.boundary_area / (2.0 * math.pi)
    m = eta.size
    k = np.fft.rfftfreq(m, d=1.0 / m)
    eta_theta = np.fft.irfft(1j * k * np.fft.rfft(eta), n=m)
    eta_s = eta_theta / radius
    J = _area_element_signed(geom, eta)
    root = np.sqrt(J * J + eta_s * eta_s)
    a_t = J / root
    a_s = -eta_s / (J * root)
    return {"a_t": a_t, "a_s": a_s,
            "a_t_minus_1": float(np.max(np.abs(a_t - 1.0))),
            "a_s_norm": float(np.max(np.abs(a_s)))}


def _area_element_signed(geom, t):
    """J(t) extended to small negative t by its closed form."""
    t = np.asarray(t, dtype=float)
    if np.all(t >= 0):
        return geom.area_element(t)
    p = geom.params
    if geom.kind == "slab":
        return np.ones_like(t)
    if geom.kind == "disk":
        return (1.0 - t / p["R"]) ** (p.get("dim", 2) - 1)
    if geom.kind == "annulus":
        return (1.0 + t / p["R_in"]) if p["side"] == "inner" else (1.0 - t / p["R_out"])
    if geom.kind in ("sphere_cap", "sphere_band"):
        th = math.asin(p["tau"])
        sgn = 1.0 if geom.kind == "sphere_cap" else -1.0
        return (np.cos(th + sgn * t) / math.cos(th)) ** (int(p["n"]) - 1)
    raise ValueError("negative eta not supported for this geometry")


def amplitude_sweep(geom, amps=(1e-2, 5e-3, 2.5e-3), mode: int = 1, m: int = 256) -> dict:
    """Scaling of ||a_t - 1|| and ||a_s|| with the amplitude of eta = A cos(k theta)."""
    theta = 2.0 * math.pi * np.arange(m) / m
    at, as_ = [], []
    for A in amps:
        r = perturbed_normal(A * np.cos(mode * theta), geom)
        at.append(r["a_t_minus_1"])
        as_.append(r["a_s_norm"])
    return {"amps": list(amps), "a_t_minus_1": at, "a_s": as_, "mode": mode,
            "slope_a_t": loglog_slope(amps, at), "slope_a_s": loglog_slope(amps, as_)}


# Projection ----------------------------------------------------------------

@dataclass
class ProjectionRecord:
    eta: float
    projection: float
    constant: float
    predicted: dict
    eps: float
    beta: float
    jump: float
    projection_plain_gdot: float
    within_regime: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _side_integral(values, h, shift, sign, eps, omega, plain):
    """int over one side of u(t) * kernel(t), t = eta + sign * s."""
    lam = CutoffProfile(eps, omega)
    s = h * np.arange(values.size)
    t = shift + sign * s
    keep = np.abs(t) <= eps * lam.lam
    x = np.abs(t[keep]) / eps
    ker = eval_heteroclinic(x, 1) if plain else lam(x, 1)
    return simpson(values[keep] * ker, dx=h)


def projection(pasted: dict, omega: float = 6.0, plain: bool = False) -> float:
    """int_{omega eps ln eps}^{-omega eps ln eps} u gbar'(t/eps) dt for a pasted slab field."""
    eps, eta = pasted["eps"], pasted["eta"]
    plus, minus = pasted["sides"]["plus"], pasted["sides"]["minus"]
    ip = _side_integral(plus.u.values, plus.u.grid.h, eta, 1.0, eps, omega, plain)
    im = _side_integral(minus.u.values, minus.u.grid.h, eta, -1.0, eps, omega, plain)
    return float(ip - im)


def projection_test(geom, eps: float, beta: float = 0.5, amps=None, omega: float = 6.0,
                    divisor: float = 40.0, jump_tol: float = 1e-4) -> dict:
    """Projection of the pasted slab solution onto gbar' for constant displacements.

    ``jump_tol`` bounds the Neumann jump relative to the one-sided slope;
    the two sides use different h, so the jump is O(h^2) rather than
    exponentially small.
    """
    if geom.kind != "slab":
        raise ValueError("projection test is implemented for the symmetric slab")
    if eps * CutoffProfile(eps, omega).lam >= geom.params["L"]:
        raise ValueError("integration window exceeds the slab")
    A0 = eps ** (1.0 + beta)
    amps = [A0, 2.0 * A0] if amps is None else list(amps)
    records = []
    for A in amps:
        pasted = two_sided_paste(geom, A, eps, divisor)
        if abs(pasted["jump"]) > jump_tol * abs(pasted["d_plus"]):
            raise ValueError(f"pasted field is not C^1: Neumann jump {pasted['jump']:.3e}")
        p = projection(pasted, omega)
        records.append(ProjectionRecord(
            A, p, p / A if A else math.nan,
            {"sigma0": SIGMA0 * A, "2sigma0": 2.0 * SIGMA0 * A}, eps, beta,
            pasted["jump"], projection(pasted, omega, plain=True),
            bool(A <= 2.0 * A0 * (1 + 1e-12))))
    out = {"records": records}
    nz = [r for r in records if r.eta != 0]
    if len(nz) >= 2:
        r1, r2 = nz[0], nz[1]
        out["ratio"] = r2.projection / r1.projection
        out["amp_ratio"] = r2.eta / r1.eta
        const = r1.constant
        errs = {"sigma0": abs(abs(const) - SIGMA0) / SIGMA0,
                "2sigma0": abs(abs(const) - 2 * SIGMA0) / (2 * SIGMA0)}
        out["constant"] = const
        out["winner"] = min(errs, key=errs.get)
        out["rel_errors"] = errs
        out["sign"] = int(np.sign(const))
    return out
