"""Finite-volume radial Laplacian, the linearized operator L_eps and the
eps-weighted Hoelder norms.

The radial operator ``eps^2 (f'' - H_t f') = eps^2 J^{-1} (J f')'`` is
discretised in conservative form on a uniform node grid::

    (L f)_i = eps^2 [J_{i+1/2}(f_{i+1} - f_i) - J_{i-1/2}(f_i - f_{i-1})] / (h^2 V_i)

where ``V_i`` is the mean of J over the dual cell of node i.  This is the
exact gradient of the discrete energy, stays well defined where J vanishes
(center of a ball, pole of a sphere) and is exact on quadratics when J is
linear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal, solve_banded

from .mesh import Field, Grid, GridTooCoarse  # noqa: F401  (re-exported)
from .profiles import CutoffProfile, W, d2W, dW, eval_heteroclinic, smooth_cutoff

RIGHT_BCS = ("dirichlet", "natural", "regular", "pinned")


class InvertibilityFailure(RuntimeError):
    pass


def _cell_means(geom, grid: Grid, npts: int = 4) -> np.ndarray:
    """Mean of J over each dual cell (half cells at the two ends)."""
    x, w = leggauss(npts)
    t, h = grid.t, grid.h
    lo = np.maximum(t - h / 2, grid.start)
    hi = np.minimum(t + h / 2, grid.stop)
    total = np.zeros_like(t)
    for a, b in ((lo, t), (t, hi)):
        mid, half = (a + b) / 2, (b - a) / 2
        for xk, wk in zip(x, w):
            total += wk * half * geom.area_element(np.clip(mid + half * xk, grid.start, grid.stop))
    return total / h


class Discretization:
    """Radial finite-volume discretization of eps^2 Delta on ``grid``.

    The left node (t = 0) is always a zero Dirichlet node.  ``right_bc`` is
    ``dirichlet`` (value 0), ``pinned`` (value 1), ``natural`` or
    ``regular`` (no flux; the latter where J vanishes).
    """

    def __init__(self, geom, eps: float, grid: Grid, right_bc: str | None = None,
                 divisor: float = 20.0):
        grid.check_resolution(eps, divisor)
        if grid.start != 0.0:
            raise ValueError("radial grids start at the boundary t = 0")
        self.geom, self.eps, self.grid = geom, eps, grid
        self.right_bc = right_bc or geom.far_end
        if self.right_bc not in RIGHT_BCS:
            raise ValueError(f"unknown right boundary condition {self.right_bc!r}")
        t, h = grid.t, grid.h
        self.J_face = geom.area_element(0.5 * (t[1:] + t[:-1]))
        self.V = _cell_means(geom, grid)
        n = grid.n
        c = eps * eps / (h * h)
        self.lower = np.zeros(n + 1)
        self.upper = np.zeros(n + 1)
        self.lower[1:] = c * self.J_face / self.V[1:]
        self.upper[:-1] = c * self.J_face / self.V[:-1]
        self.fixed = np.zeros(n + 1, dtype=bool)
        self.fixed[0] = True
        self.fixed_values = np.zeros(n + 1)
        if self.right_bc in ("dirichlet", "pinned"):
            self.fixed[-1] = True
            self.fixed_values[-1] = 1.0 if self.right_bc == "pinned" else 0.0
        self.free = np.nonzero(~self.fixed)[0]

    @property
    def dirichlet_flags(self) -> tuple[bool, bool]:
        return True, self.right_bc == "dirichlet"

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """eps^2 Delta u at the free nodes."""
        out = np.zeros_like(u)
        out[1:] += self.lower[1:] * (u[:-1] - u[1:])
        out[:-1] += self.upper[:-1] * (u[1:] - u[:-1])
        return out[self.free]

    def residual(self, u: np.ndarray) -> np.ndarray:
        """eps^2 Delta u - W'(u) at the free nodes."""
        return self.laplacian(u) - dW(u[self.free])

    def banded(self, potential: np.ndarray) -> np.ndarray:
        """(1,1)-banded matrix of eps^2 Delta - diag(potential) on free nodes."""
        i = self.free
        ab = np.zeros((3, i.size))
        ab[0, 1:] = self.upper[i[:-1]]
        ab[1] = -(self.lower[i] + self.upper[i]) - potential
        ab[2, :-1] = self.lower[i[1:]]
        return ab

    def symmetric_tridiagonal(self, potential: np.ndarray):
        """Diagonal and off-diagonal of V^{1/2} (eps^2 Delta - P) V^{-1/2}."""
        i = self.free
        d = -(self.lower[i] + self.upper[i]) - potential
        e = np.sqrt(self.upper[i[:-1]] * self.lower[i[1:]])
        return d, e

    def energy(self, u: np.ndarray) -> float:
        """Discrete energy per unit boundary area.

        Midpoint rule for the gradient term, dual-cell rule for W; its
        gradient is exactly -(h V / eps) times :meth:`residual`.
        """
        h, eps = self.grid.h, self.eps
        grad = np.sum(self.J_face * np.diff(u) ** 2) / (2.0 * h) * eps
        pot = np.sum(self.V * W(u)) * h / eps
        return float(grad + pot)

    def full(self, free_values: np.ndarray) -> np.ndarray:
        u = self.fixed_values.copy()
        u[self.free] = free_values
        return u


@dataclass
class LinearizedOperator:
    """L_eps = eps^2 Delta - W''(gbar_eps) on the free nodes of ``disc``."""

    disc: Discretization
    potential: np.ndarray
    omega: float

    @property
    def eps(self) -> float:
        return self.disc.eps

    @property
    def grid(self) -> Grid:
        return self.disc.grid

    def apply(self, f: np.ndarray) -> np.ndarray:
        """L f at the free nodes; ``f`` is given on all nodes (fixed ones 0)."""
        return self.disc.laplacian(f) - self.potential * f[self.disc.free]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve L f = rhs with zero values on fixed nodes; returns all nodes."""
        sol = solve_banded((1, 1), self.disc.banded(self.potential), rhs)
        out = np.zeros(self.grid.n + 1)
        out[self.disc.free] = sol
        return out

    def top_eigenvalue(self) -> float:
        d, e = self.disc.symmetric_tridiagonal(self.potential)
        m = d.size
        return float(eigh_tridiagonal(d, e, eigvals_only=True,
                                      select="i", select_range=(m - 1, m - 1))[0])

    def dirichlet_subproblem(self, i0: int, i1: int, left: float, right: float) -> np.ndarray:
        """Solve L f = 0 on nodes i0 < i < i1 with prescribed end values."""
        if i1 - i0 < 2:
            raise ValueError("need at least one interior node")
        d = self.disc
        idx = np.arange(i0 + 1, i1)
        ab = np.zeros((3, idx.size))
        ab[0, 1:] = d.upper[idx[:-1]]
        ab[1] = -(d.lower[idx] + d.upper[idx]) - self.potential_at(idx)
        ab[2, :-1] = d.lower[idx[1:]]
        rhs = np.zeros(idx.size)
        rhs[0] -= d.lower[idx[0]] * left
        rhs[-1] -= d.upper[idx[-1]] * right
        f = np.empty(i1 - i0 + 1)
        f[0], f[-1] = left, right
        f[1:-1] = solve_banded((1, 1), ab, rhs)
        return f

    def potential_at(self, idx: np.ndarray) -> np.ndarray:
        full = np.zeros(self.grid.n + 1)
        full[self.disc.free] = self.potential
        return full[idx]


def assemble_L(geom, eps: float, grid: Grid, omega: float = 6.0,
               right_bc: str | None = None, divisor: float = 20.0) -> LinearizedOperator:
    disc = Discretization(geom, eps, grid, right_bc, divisor)
    gb = CutoffProfile(eps, omega).on_t(grid.t[disc.free])
    return LinearizedOperator(disc, d2W(gb), omega)


# Weighted Hoelder norms ---------------------------------------------------

@dataclass(frozen=True)
class HolderNorm:
    """C^{k,alpha}_eps: derivatives and distances measured in the metric g/eps^2."""

    k: int
    alpha: float
    eps: float
    exhaustive_limit: int = 2000
    n_pairs: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise ValueError("k must be 0, 1 or 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


def scaled_derivatives(y: np.ndarray, h: float, eps: float, k: int) -> list[np.ndarray]:
    """[f, eps f', eps^2 f''] up to order k by second-order differences."""
    out = [y]
    if k >= 1:
        out.append(eps * np.gradient(y, h, edge_order=2))
    if k >= 2:
        d2 = np.empty_like(y)
        d2[1:-1] = y[2:] - 2.0 * y[1:-1] + y[:-2]
        d2[0] = 2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]
        d2[-1] = 2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]
        out.append(eps * eps * d2 / (h * h))
    return out


def holder_seminorm(y: np.ndarray, h: float, eps: float, alpha: float,
                    exhaustive_limit: int = 2000, n_pairs: int = 100_000,
                    seed: int = 0) -> float:
    """max |y_i - y_j| / (|t_i - t_j| / eps)^alpha over pairs at scaled distance <= 1."""
    n = y.size
    M = min(int(math.floor(eps / h * (1 + 1e-9))), n - 1)
    if M < 1:
        return 0.0
    if n <= exhaustive_limit:
        best = 0.0
        for m in range(1, M + 1):
            q = np.max(np.abs(y[m:] - y[:-m])) / (m * h / eps) ** alpha
            best = max(best, float(q))
        return best
    rng = np.random.default_rng(seed)
    m = rng.integers(1, M + 1, size=n_pairs)
    i = rng.integers(0, n - m)
    return float(np.max(np.abs(y[i + m] - y[i]) / (m * h / eps) ** alpha))


def holder_norm(f, norm: HolderNorm, h: float | None = None) -> float:
    """||f||_{C^{k,alpha}_eps} = sum_j ( ||D^j f||_0 + [D^j f]_alpha )."""
    if isinstance(f, Field):
        y, h = f.values, f.grid.h
    else:
        y = np.asarray(f, dtype=float)
        if h is None:
            raise ValueError("spacing h required for raw arrays")
    total = 0.0
    for dj in scaled_derivatives(y, h, norm.eps, norm.k):
        total += float(np.max(np.abs(dj)))
        total += holder_seminorm(dj, h, norm.eps, norm.alpha, norm.exhaustive_limit,
                                 norm.n_pairs, norm.seed)
    return total


# Schauder constant ---------------------------------------------------------

def trial_fields(s: np.ndarray, trials: int = 64, seed: int = 0):
    """Yield (label, field) trial functions of the blown-up variable s.

    Half are Gaussian-times-polynomial bumps vanishing at s = 0, half are
    cut-off, modulated copies of g' (the direction closest to the kernel).
    Parameters depend only on (seed, index), so the same family is used at
    every eps.
    """
    n_bump = trials // 2
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        if i < n_bump:
            c, w = rng.uniform(0.5, 6.0), rng.uniform(0.4, 2.5)
            a1, a2 = rng.normal(0.0, 0.5, size=2)
            f = s * (1.0 + a1 * s + a2 * s * s) * np.exp(-((s - c) ** 2) / (2 * w * w))
            yield "bump", f
        else:
            a = rng.uniform(0.1, 3.0)
            b, kap = rng.uniform(0.0, 0.5), rng.uniform(0.0, 2.0)
            f = smooth_cutoff(s / a) * eval_heteroclinic(s, 1) * (1.0 + b * np.sin(kap * s))
            yield "near_kernel", f


@dataclass
class SchauderEstimate:
    K_est: float
    ratios: np.ndarray
    labels: list
    top_eigenvalue: float


def schauder_constant(op: LinearizedOperator, norm: HolderNorm, trials: int = 64,
                      seed: int = 0) -> SchauderEstimate:
    """K_est = max over trials of ||f||_{C^{2,a}_eps} / ||L f||_{C^{a}_eps}."""
    lam = op.top_eigenvalue()
    if not np.isfinite(lam) or abs(lam) < 1e-10:
        raise InvertibilityFailure(f"discrete L_eps is singular (eigenvalue {lam:.3e})")
    grid, eps, h = op.grid, op.eps, op.grid.h
    s = grid.t / eps
    hi = HolderNorm(2, norm.alpha, eps, norm.exhaustive_limit, norm.n_pairs, norm.seed)
    lo = HolderNorm(0, norm.alpha, eps, norm.exhaustive_limit, norm.n_pairs, norm.seed)
    ratios, labels = [], []
    for label, f in trial_fields(s, trials, seed):
        f = f.copy()
        f[op.disc.fixed] = 0.0
        if not np.any(f):
            continue
        Lf = op.apply(f)
        ratios.append(holder_norm(f, hi, h) / holder_norm(Lf, lo, h))
        labels.append(label)
    ratios = np.asarray(ratios)
    return SchauderEstimate(float(ratios.max()), ratios, labels, lam)
