"""Neumann data of the minimizer and coefficient fits across eps-sweeps."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .minimizer import SolveConfig, refine_solution, richardson
from .profiles import C0, KAPPA0, SIGMA, SIGMA0, SQRT2

# (-25, 48, -36, 16, -3) / 12: fourth-order one-sided first derivative
_STENCIL = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


def one_sided_derivative(values: np.ndarray, h: float) -> float:
    return float(np.dot(_STENCIL, values[:5]) / h)


def extract_neumann(sol) -> float:
    """d_nu u at t = 0 by the one-sided fourth-order stencil."""
    return one_sided_derivative(sol.u.values, sol.u.grid.h)


@dataclass
class NeumannRecord:
    eps: float
    dnu: float
    leading_removed: float
    geometry: str
    h: float
    raw: list = field(default_factory=list)  # stencil values at h, h/2, ...

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("raw")
        for k, v in enumerate(self.raw):
            d[f"dnu_level{k}"] = v
        return d


def neumann_record(geom, eps: float, divisor: float = 20.0, levels: int = 2,
                   newton_tol: float = 1e-11, t_max: float | None = None) -> NeumannRecord:
    """Neumann data at one eps, Richardson-extrapolated in h over ``levels`` refinements.

    The finite-volume solve is second order with an even error expansion,
    so values at h, h/2, h/4 are combined to cancel the h^2 and h^4 terms.
    """
    cfg = SolveConfig(eps, geom, divisor=divisor, newton_tol=newton_tol, t_max=t_max)
    sols = refine_solution(cfg, levels)
    if any(s.trivial for s in sols):
        raise RuntimeError(f"trivial minimizer at eps={eps}")
    raw = [extract_neumann(s) for s in sols]
    dnu = float(richardson(raw)) if levels else raw[0]
    return NeumannRecord(eps, dnu, dnu - 1.0 / (eps * SQRT2), geom.key,
                         sols[0].u.grid.h, raw)


def neumann_sweep(geom, eps_list, divisor: float = 20.0, levels: int = 2,
                  newton_tol: float = 1e-11, workers: int = 1) -> list[NeumannRecord]:
    eps_list = sorted(eps_list, reverse=True)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(neumann_record, geom, e, divisor, levels, newton_tol)
                    for e in eps_list]
            return [f.result() for f in futs]
    return [neumann_record(geom, e, divisor, levels, newton_tol) for e in eps_list]


@dataclass
class FitReport:
    geometry: str
    eps: list
    terms: list
    coefficients: dict
    residuals: list
    residual_slope: float
    condition_number: float
    H0: float
    Hdot0: float
    H_coefficient: float | None = None
    order0_richardson: float | None = None
    order0_expected: float | None = None
    order0_rel_error: float | None = None
    eps_coefficient: float | None = None
    eps_coefficient_richardson: float | None = None
    candidates: dict = field(default_factory=dict)
    best_candidate: str | None = None
    best_rel_error: float | None = None
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


_BASIS = {
    "inv_eps": lambda e: 1.0 / e,
    "const": lambda e: np.ones_like(e),
    "eps": lambda e: e,
    "eps2": lambda e: e * e,
    "eps3": lambda e: e**3,
}


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    keep = y > 0
    if np.count_nonzero(keep) < 2:
        return math.nan
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def fit_expansion(records, curvature, terms=None, fix_leading: bool = True) -> FitReport:
    """Least-squares fit of the Neumann data against powers of eps.

    ``curvature`` is the geometry's CurvatureData.  With ``fix_leading``
    the known 1/(eps sqrt2) term is subtracted first and ``terms`` fit the
    remainder.  Defaults: {const, eps, eps2} when H0 != 0 and
    {eps, eps2, eps3} when the boundary is minimal, so the eps^2 term is
    fitted rather than assumed absent.  The order-0 (resp. order-eps) coefficient is also
    estimated by two-point Richardson in eps on the two smallest eps.
    """
    if len(records) < 4:
        raise ValueError("need at least 4 eps values")
    recs = sorted(records, key=lambda r: r.eps, reverse=True)
    eps = np.array([r.eps for r in recs])
    ratios = eps[:-1] / eps[1:]
    warn = []
    if np.ptp(ratios) > 1e-6 * ratios.mean():
        warn.append("eps values are not geometrically spaced")
    H0, Hd = curvature.H0, curvature.Hdot0
    minimal = abs(H0) < 1e-12
    if terms is None:
        terms = ["eps", "eps2", "eps3"] if minimal else ["const", "eps", "eps2"]
    y = np.array([r.leading_removed if fix_leading else r.dnu for r in recs])
    X = np.column_stack([_BASIS[t](eps) for t in terms])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    cond = float(np.linalg.cond(X))
    if cond > 1e8:
        warn.append(f"ill-conditioned fit (cond={cond:.2e})")
    coefficients = dict(zip(terms, map(float, coef)))
    resid = y - X @ coef
    rep = FitReport(recs[0].geometry, eps.tolist(), list(terms), coefficients,
                    resid.tolist(), math.nan, cond, H0, Hd, warnings=warn)
    lr = np.array([r.leading_removed for r in recs])
    if not minimal:
        # r(eps) = c0 + c1 eps + ...  ->  c0 ~ 2 r(eps/2) - r(eps)
        c0 = 2.0 * lr[-1] - lr[-2] if eps[-2] / eps[-1] == 2.0 else float(coefficients.get("const", math.nan))
        expected = -(2.0 / 3.0) * H0
        rep.order0_richardson = float(c0)
        rep.order0_expected = expected
        rep.order0_rel_error = abs(abs(c0) - abs(expected)) / abs(expected)
        rep.H_coefficient = float(c0 / H0)
        rep.residual_slope = loglog_slope(eps, lr - expected)
    else:
        q = lr / eps
        ce = 2.0 * q[-1] - q[-2]
        rep.eps_coefficient = coefficients.get("eps")
        rep.eps_coefficient_richardson = float(ce)
        if Hd != 0:
            rep.candidates = {"kappa0/sigma": KAPPA0 / SIGMA * Hd,
                              "kappa0/sigma0": KAPPA0 / SIGMA0 * Hd}
            c = rep.eps_coefficient
            errs = {k: abs(abs(c) - abs(v)) / abs(v) for k, v in rep.candidates.items()}
            rep.best_candidate = min(errs, key=errs.get)
            rep.best_rel_error = errs[rep.best_candidate]
        rep.residual_slope = loglog_slope(eps, lr - coefficients.get("eps", 0.0) * eps)
    return rep


def zero_distance_check(shifted: dict, reference: dict, K_est: float | None = None) -> dict:
    """Locate the extremum of the comparison field u_eta - u_0.

    Both arguments come from :func:`minimizer.two_sided_paste` (interface
    at eta and at 0).  The distance from the shifted zero to the extremum
    is returned in units of eps.  If the comparison field vanishes the
    check is skipped and NaN is returned (up to interpolation roundoff).
    """
    from scipy.interpolate import CubicSpline

    eps, eta = shifted["eps"], shifted["eta"]
    t = shifted["t"]
    ref = CubicSpline(reference["t"], reference["u"])(t)
    diff = shifted["u"] - ref
    if np.max(np.abs(diff)) <= 1e-12:
        return {"scaled_distance": math.nan, "skipped": True}
    i = int(np.argmax(np.abs(diff)))
    d = abs(t[i] - eta) / eps
    out = {"scaled_distance": float(d), "t_extremum": float(t[i]),
           "max_abs": float(abs(diff[i])), "upper": C0 + 0.1, "skipped": False,
           "in_band": bool(0.0 < d <= C0 + 0.1)}
    if K_est is not None:
        out["lower"] = 1.0 / (4.0 * K_est)
        out["above_lower"] = bool(d >= out["lower"])
    return out
