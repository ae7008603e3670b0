"""Positive Dirichlet minimizer of the Allen-Cahn energy on radial domains.

Damped Newton on the discrete energy.  The Hessian is symmetric, so a
Cholesky factorisation doubles as a convexity test; where it fails a
diagonal shift is added, which keeps every step a descent direction.
Iterates are projected onto [0, 1], which never raises the energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .mesh import Field, Grid
from .operators import Discretization
from .profiles import d2W, eval_heteroclinic


class NewtonFailure(RuntimeError):
    pass


@dataclass
class SolveConfig:
    eps: float
    geom: object
    divisor: float = 20.0
    newton_tol: float = 1e-10
    max_iters: int = 100
    init: object = "heteroclinic"  # "heteroclinic" | "ones" | Field | array
    right_bc: str | None = None
    t_max: float | None = None
    grid: Grid | None = None
    continuation: bool = True

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    def make_grid(self) -> Grid:
        if self.grid is not None:
            return self.grid
        T = self.geom.domain_length if self.t_max is None else min(self.t_max, self.geom.domain_length)
        return Grid.covering(0.0, T, self.eps / self.divisor)

    def boundary_condition(self) -> str:
        if self.right_bc is not None:
            return self.right_bc
        if self.t_max is not None and self.t_max < self.geom.domain_length:
            return "pinned"
        return self.geom.far_end


@dataclass
class Solution:
    u: Field
    energy: float
    iterations: int
    residual: float
    disc: Discretization
    trivial: bool = False
    energy_history: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return self.u.grid.t

    @property
    def eps(self) -> float:
        return self.disc.eps


def initial_guess(disc: Discretization, init) -> np.ndarray:
    t = disc.grid.t
    if isinstance(init, Field):
        u = np.interp(t, init.t, init.values)
    elif isinstance(init, np.ndarray):
        u = np.interp(t, np.linspace(t[0], t[-1], init.size), init)
    elif init == "ones":
        u = np.ones_like(t)
    elif init == "heteroclinic":
        u = eval_heteroclinic(t / disc.eps)
        if disc.right_bc == "dirichlet":
            u = u * eval_heteroclinic((t[-1] - t) / disc.eps)
    else:
        raise ValueError(f"unknown init {init!r}")
    u = np.clip(u, 0.0, 1.0)
    u[disc.fixed] = disc.fixed_values[disc.fixed]
    return u


def _hessian_upper(disc: Discretization, u: np.ndarray, shift: float) -> np.ndarray:
    """Upper banded form of the energy Hessian (times eps/h) plus a shift."""
    i = disc.free
    V = disc.V[i]
    ab = np.zeros((2, i.size))
    ab[0, 1:] = -disc.upper[i[:-1]] * V[:-1]
    ab[1] = (disc.lower[i] + disc.upper[i] + d2W(u[i]) + shift) * V
    return ab


def residual_floor(eps: float, h: float) -> float:
    """Rounding level of the residual: eps^2/h^2 amplifies machine epsilon."""
    return 256.0 * np.finfo(float).eps * (eps / h) ** 2


def _newton(disc: Discretization, u: np.ndarray, tol: float, max_iters: int):
    h, eps = disc.grid.h, disc.eps
    free = disc.free
    tol = max(tol, residual_floor(eps, h))
    E = disc.energy(u)
    history = [E]
    res = disc.residual(u)
    rn = float(np.max(np.abs(res)))
    for it in range(1, max_iters + 1):
        if rn <= tol:
            return u, it - 1, rn, history, True
        rhs = res * disc.V[free]  # = -(eps/h) * energy gradient
        shift = 0.0
        while True:
            try:
                cb = cholesky_banded(_hessian_upper(disc, u, shift))
                break
            except LinAlgError:
                shift = 1.0 if shift == 0.0 else 4.0 * shift
        step = cho_solve_banded((cb, False), rhs)
        slope = -float(np.dot(rhs, step)) * h / eps  # directional derivative of E
        lam, accepted = 1.0, False
        for _ in range(31):
            trial = u.copy()
            trial[free] = np.clip(u[free] + lam * step, 0.0, 1.0)
            E1 = disc.energy(trial)
            res1 = disc.residual(trial)
            rn1 = float(np.max(np.abs(res1)))
            armijo = E1 <= E + 1e-4 * lam * slope and slope < 0
            contract = rn1 <= (1.0 - 0.5 * lam) * rn and E1 <= E + 1e-12 * max(1.0, abs(E))
            if armijo or contract:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return u, it, rn, history, False
        u, E, res, rn = trial, E1, res1, rn1
        history.append(E)
    return u, max_iters, rn, history, rn <= tol


def minimize(cfg: SolveConfig) -> Solution:
    grid = cfg.make_grid()
    disc = Discretization(cfg.geom, cfg.eps, grid, cfg.boundary_condition(), cfg.divisor)
    u0 = initial_guess(disc, cfg.init)
    u, iters, rn, hist, ok = _newton(disc, u0, cfg.newton_tol, cfg.max_iters)
    flags = []
    if not ok and cfg.continuation and 2 * cfg.eps < 1:
        coarse = minimize(SolveConfig(2 * cfg.eps, cfg.geom, cfg.divisor * 2, cfg.newton_tol,
                                      cfg.max_iters, cfg.init, cfg.right_bc, cfg.t_max, grid,
                                      continuation=False))
        u, iters, rn, hist, ok = _newton(disc, initial_guess(disc, coarse.u), cfg.newton_tol,
                                         cfg.max_iters)
        flags.append("continuation")
    if not ok:
        raise NewtonFailure(f"Newton stalled at residual {rn:.3e} (eps={cfg.eps})")
    if rn > cfg.newton_tol:
        flags.append("tol_floored")
    trivial = bool(np.max(u) < 1e-8)
    if trivial:
        flags.append("trivial")
    field_ = Field(grid, u, dirichlet=disc.dirichlet_flags)
    return Solution(field_, disc.energy(u) * cfg.geom.boundary_area, iters, rn, disc,
                    trivial, hist, flags)


def energy(u, cfg: SolveConfig) -> float:
    """Total energy of a field on the configuration's discretization."""
    values = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    grid = u.grid if isinstance(u, Field) else cfg.make_grid()
    disc = Discretization(cfg.geom, cfg.eps, grid, cfg.boundary_condition(), cfg.divisor)
    return disc.energy(values) * cfg.geom.boundary_area


def refine_solution(cfg: SolveConfig, levels: int = 2) -> list[Solution]:
    """Solutions on the configuration grid and ``levels`` nested 2x refinements."""
    sols = [minimize(cfg)]
    for _ in range(levels):
        prev = sols[-1]
        g = prev.u.grid.refine(2)
        sub = SolveConfig(cfg.eps, cfg.geom, cfg.divisor, cfg.newton_tol, cfg.max_iters,
                          prev.u, cfg.right_bc, cfg.t_max, g, cfg.continuation)
        sols.append(minimize(sub))
    return sols


def richardson_field(sols: list[Solution]) -> np.ndarray:
    """h^2, h^4 Richardson table on the coarsest grid's nodes."""
    vals = [s.u.values[:: 2**k] for k, s in enumerate(sols)]
    return richardson(vals)


def richardson(values: list, p: int = 2) -> np.ndarray:
    """Eliminate h^p, h^{2p}, ... from values computed at h, h/2, h/4, ..."""
    table = [np.asarray(v, dtype=float) for v in values]
    order = p
    while len(table) > 1:
        f = 2.0**order
        table = [(f * table[k + 1] - table[k]) / (f - 1.0) for k in range(len(table) - 1)]
        order += p
    return table[0]


def two_sided_paste(geom, eta: float, eps: float, divisor: float = 40.0,
                    newton_tol: float = 1e-12, n: int | None = None) -> dict:
    """Odd pasting across an interface displaced by ``eta``.

    ``geom`` is a slab of half-length L (domain [-L, L], reflecting ends):
    the nonnegative minimizer on [eta, L] is glued to minus the one on
    [-L, eta].  Both sides use the same number of intervals, so the
    pasted field depends smoothly on eta.
    """
    from .geometry import Geometry

    if geom.kind != "slab":
        raise ValueError("two_sided_paste supports the slab pair; use pasting.match_sphere for spheres")
    L = geom.params["L"]
    if abs(eta) >= L:
        raise ValueError("interface must lie inside the slab")
    if n is None:
        n = int(math.ceil((L + abs(eta)) * divisor / eps))
    sides = {}
    for name, length in (("plus", L - eta), ("minus", L + eta)):
        g = Grid(0.0, length, n)
        cfg = SolveConfig(eps, Geometry.slab(length), divisor=divisor,
                          newton_tol=newton_tol, right_bc="natural", grid=g)
        sides[name] = minimize(cfg)
    from .neumann import one_sided_derivative

    plus, minus = sides["plus"], sides["minus"]
    flags = [f"{k}_trivial" for k, s in sides.items() if s.trivial]
    d_plus = one_sided_derivative(plus.u.values, plus.u.grid.h)
    d_minus = one_sided_derivative(minus.u.values, minus.u.grid.h)
    t = np.concatenate([eta - minus.t[::-1], eta + plus.t[1:]])
    u = np.concatenate([-minus.u.values[::-1], plus.u.values[1:]])
    return {"t": t, "u": u, "eta": eta, "eps": eps, "jump": d_plus - d_minus,
            "d_plus": d_plus, "d_minus": d_minus, "flags": flags, "sides": sides}
