"""Truncated boundary-layer expansions and their residual orders.

    k = 0:  gbar_eps
    k = 1:  gbar_eps + eps H0 wbar_eps
    k = 2:  gbar_eps + eps^2 Hdot0 taubar_eps        (minimal boundary, H0 = 0)

Profiles come from :mod:`halfline_ode` and are cut off like gbar.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .halfline_ode import library_profile
from .mesh import Field, Grid
from .minimizer import SolveConfig, refine_solution, richardson_field
from .neumann import loglog_slope
from .operators import HolderNorm, holder_norm
from .profiles import CutoffProfile, cutoff_scale

MARGINS = {0: 0.1, 1: 0.2, 2: 0.3}
W_KINDS = {"gdot": "gdot", "g": "heteroclinic_g"}


@dataclass(frozen=True)
class ExpansionSpec:
    order: int
    H0: float
    Hdot0: float
    omega: float = 6.0
    w_rhs: str = "gdot"

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        if self.order == 2 and abs(self.H0) > 1e-12:
            raise ValueError("order 2 needs H0 = 0: the H0^2 profiles are not specified")
        if self.w_rhs not in W_KINDS:
            raise ValueError("w_rhs must be 'gdot' or 'g'")

    @classmethod
    def for_geometry(cls, geom, order: int, omega: float = 6.0, w_rhs: str = "gdot"):
        c = geom.curvature_data()
        return cls(order, c.H0, c.Hdot0, omega, w_rhs)


def build_expansion(spec: ExpansionSpec, eps: float, grid: Grid) -> Field:
    s = grid.t / eps
    u = CutoffProfile(eps, spec.omega)(s)
    if spec.order >= 1 and spec.H0 != 0.0:
        w = library_profile(W_KINDS[spec.w_rhs])
        u = u + eps * spec.H0 * CutoffProfile(eps, spec.omega, base=w)(s)
    if spec.order >= 2 and spec.Hdot0 != 0.0:
        tau = library_profile("t_times_gdot")
        u = u + eps**2 * spec.Hdot0 * CutoffProfile(eps, spec.omega, base=tau)(s)
    u = np.asarray(u, dtype=float)
    u[0] = 0.0
    return Field(grid, u, dirichlet=(True, False), meta={"spec": spec})


@dataclass
class ExtrapolatedSolution:
    """Minimizer values on a grid after Richardson extrapolation in h."""

    eps: float
    grid: Grid
    u: np.ndarray
    levels: int


def solve_extrapolated(geom, eps: float, divisor: float = 20.0, levels: int = 2,
                       newton_tol: float = 1e-11) -> ExtrapolatedSolution:
    cfg = SolveConfig(eps, geom, divisor=divisor, newton_tol=newton_tol)
    sols = refine_solution(cfg, levels)
    return ExtrapolatedSolution(eps, sols[0].u.grid, richardson_field(sols), levels)


@dataclass
class ResidualReport:
    order: int
    eps: list
    norm_c0: list
    norm_c2a: list
    fitted_order_c0: float
    fitted_order: float
    target: float
    passed: bool
    w_rhs: str
    alpha: float
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)


def residual_field(spec: ExpansionSpec, sol: ExtrapolatedSolution):
    """phi = u - expansion restricted to the collar t <= -omega eps ln eps."""
    phi = sol.u - build_expansion(spec, sol.eps, sol.grid).values
    t_c = sol.eps * cutoff_scale(sol.eps, spec.omega)
    keep = sol.grid.t <= t_c + 1e-12
    return phi[keep]


def residual_order(spec: ExpansionSpec, solutions, alpha: float = 0.5) -> ResidualReport:
    eps, n0, n2 = [], [], []
    for sol in sorted(solutions, key=lambda s: -s.eps):
        phi = residual_field(spec, sol)
        h = sol.grid.h
        eps.append(sol.eps)
        n0.append(float(np.max(np.abs(phi))))
        n2.append(holder_norm(phi, HolderNorm(2, alpha, sol.eps), h))
    p0 = loglog_slope(eps, n0)
    p2 = loglog_slope(eps, n2)
    target = spec.order + 1 - MARGINS[spec.order]
    return ResidualReport(spec.order, eps, n0, n2, p0, p2, target,
                          bool(p2 >= target and p0 >= target), spec.w_rhs, alpha)


def w_rhs_disambiguation(geom, solutions, alpha: float = 0.5, omega: float = 6.0) -> dict:
    """Residual orders of the k = 1 expansion built with w from RHS g' and from RHS g."""
    out = {}
    for rhs in ("gdot", "g"):
        spec = ExpansionSpec.for_geometry(geom, 1, omega, rhs)
        out[rhs] = residual_order(spec, solutions, alpha)
    ok = [k for k, r in out.items() if r.fitted_order >= 1.8]
    return {
        "orders": {k: r.fitted_order for k, r in out.items()},
        "orders_c0": {k: r.fitted_order_c0 for k, r in out.items()},
        "operative": ok[0] if len(ok) == 1 else (ok if ok else None),
        "flagged": not ok,
        "reports": out,
    }


def collar_restricted_norm_change(spec_a: ExpansionSpec, spec_b: ExpansionSpec,
                                  sol: ExtrapolatedSolution, alpha: float = 0.5) -> float:
    """Relative change of ||phi||_{C^{2,alpha}_eps} between two specs (e.g. two omegas)."""
    na = holder_norm(residual_field(spec_a, sol), HolderNorm(2, alpha, sol.eps), sol.grid.h)
    nb = holder_norm(residual_field(spec_b, sol), HolderNorm(2, alpha, sol.eps), sol.grid.h)
    return abs(na - nb) / max(na, nb) if max(na, nb) > 0 else 0.0
