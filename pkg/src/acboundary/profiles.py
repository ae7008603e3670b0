"""Heteroclinic profile, smooth cutoff, the residual R_{omega,eps} and the
universal constants of the boundary-layer expansion.

Everything here is closed form except :func:`compute_constants`, which
integrates numerically and is checked against the closed forms.

Conventions
-----------
``s`` denotes the blown-up variable ``t / eps``.  The rescaled heteroclinic
derivative is ``gdot(t / eps)`` (no ``1/eps`` factor).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

SQRT2 = math.sqrt(2.0)
SIGMA0 = SQRT2 / 3.0
KAPPA0 = (4.0 * math.log(2.0) - 1.0) / 6.0
SIGMA = 1.0 / SQRT2
C0 = math.atanh(math.sqrt(2.0 / 3.0))
T_STAR = 40.0


class ToleranceNotReached(RuntimeError):
    pass


# Double-well potential W(u) = (1 - u^2)^2 / 4 and derivatives.
def W(u):
    return 0.25 * (1.0 - u * u) ** 2


def dW(u):
    return u * u * u - u


def d2W(u):
    return 3.0 * u * u - 1.0


def _sech2(x):
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def eval_heteroclinic(t, order: int = 0):
    """g(t) = tanh(t/sqrt2) and its first two derivatives, vectorised."""
    x = np.asarray(t, dtype=float) / SQRT2
    if order == 0:
        out = np.tanh(x)
    elif order == 1:
        out = _sech2(x) / SQRT2
    elif order == 2:
        out = -np.tanh(x) * _sech2(x)
    elif order == 3:
        # g''' = W''(g) g'
        g = np.tanh(x)
        out = d2W(g) * _sech2(x) / SQRT2
    else:
        raise ValueError("order must be 0, 1, 2 or 3")
    return out if np.ndim(out) else float(out)


def one_minus_g(t):
    """1 - g(t) without cancellation for large t."""
    x = np.asarray(t, dtype=float) / SQRT2
    e = np.exp(-2.0 * np.abs(x))
    out = np.where(x >= 0, 2.0 * e / (1.0 + e), 1.0 + (1.0 - e) / (1.0 + e))
    return out if np.ndim(out) else float(out)


def log_gdot(t):
    """log of g'(t), finite for all t."""
    x = np.abs(np.asarray(t, dtype=float)) / SQRT2
    return math.log(4.0 / SQRT2) - 2.0 * x - 2.0 * np.log1p(np.exp(-2.0 * x))


# Smooth cutoff chi built from f(x) = exp(-1/x).
def _bump(x, order):
    x = np.asarray(x, dtype=float)
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    f = np.where(pos, np.exp(-1.0 / xs), 0.0)
    if order == 0:
        return f
    if order == 1:
        return np.where(pos, f / xs**2, 0.0)
    return np.where(pos, f * (1.0 - 2.0 * xs) / xs**4, 0.0)


def smooth_cutoff(x, order: int = 0):
    """chi(x) = f(x-1) / (f(x-1) + f(2-x)); 0 for x <= 1, 1 for x >= 2."""
    x = np.asarray(x, dtype=float)
    a, b = _bump(x - 1.0, 0), _bump(2.0 - x, 0)
    s = a + b
    out = a / s
    if order >= 1:
        a1, b1 = _bump(x - 1.0, 1), -_bump(2.0 - x, 1)
        s1 = a1 + b1
        d1 = (a1 * s - a * s1) / s**2
        if order == 1:
            out = d1
        else:
            a2, b2 = _bump(x - 1.0, 2), _bump(2.0 - x, 2)
            s2 = a2 + b2
            out = ((a2 * s - a * s2) * s - 2.0 * s1 * (a1 * s - a * s1)) / s**3
    return out if np.ndim(out) else float(out)


def cutoff_scale(eps: float, omega: float) -> float:
    """Lambda = -omega ln eps, the blown-up distance where the cutoff starts."""
    return -omega * math.log(eps)


class CutoffProfile:
    """``fbar(s) = target + (1 - chi(s / Lambda)) (f(s) - target)``.

    With the heteroclinic as base and target 1 this is gbar; decaying
    profiles (target 0) give wbar, taubar.  ``base(s, order)`` must return
    the base profile or its derivatives in the blown-up variable.
    """

    def __init__(self, eps: float, omega: float = 6.0,
                 base: Callable | None = None, target: float | None = None):
        if not 0.0 < eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if omega <= 5.0:
            raise ValueError("omega must exceed 5")
        self.eps = eps
        self.omega = omega
        self.lam = cutoff_scale(eps, omega)
        self._heteroclinic = base is None
        self.base = base if base is not None else eval_heteroclinic
        self.target = (1.0 if base is None else 0.0) if target is None else target

    def _deviation(self, s, order):
        if order == 0:
            if self._heteroclinic:
                return -one_minus_g(s)
            return self.base(s, 0) - self.target
        return self.base(s, order)

    def deviation(self, s):
        """fbar - target, computed without cancellation."""
        s = np.asarray(s, dtype=float)
        return (1.0 - smooth_cutoff(s / self.lam, 0)) * self._deviation(s, 0)

    def __call__(self, s, order: int = 0):
        """fbar and derivatives in the blown-up variable."""
        s = np.asarray(s, dtype=float)
        x = s / self.lam
        c = smooth_cutoff(x, 0)
        d0 = self._deviation(s, 0)
        if order == 0:
            out = self.target + (1.0 - c) * d0
        elif order == 1:
            c1 = smooth_cutoff(x, 1) / self.lam
            out = (1.0 - c) * self._deviation(s, 1) - c1 * d0
        elif order == 2:
            c1 = smooth_cutoff(x, 1) / self.lam
            c2 = smooth_cutoff(x, 2) / self.lam**2
            out = ((1.0 - c) * self._deviation(s, 2)
                   - 2.0 * c1 * self._deviation(s, 1) - c2 * d0)
        else:
            raise ValueError("order must be 0, 1 or 2")
        # untouched region: return the base profile itself, not a rounded copy
        out = np.where(x <= 1.0, self.base(s, order), out)
        return out if np.ndim(out) else float(out)

    def on_t(self, t, order: int = 0):
        """d^order/dt^order of fbar(t / eps)."""
        return self(np.asarray(t, dtype=float) / self.eps, order) / self.eps**order

    @property
    def support(self) -> tuple[float, float]:
        """Interval in t where the cutoff modifies the base profile."""
        return self.eps * self.lam, 2.0 * self.eps * self.lam


def gbar(eps: float, omega: float = 6.0) -> CutoffProfile:
    return CutoffProfile(eps, omega)


def residual_R_omega(eps: float, omega: float, grid):
    """Sample R = eps^2 d_t^2 gbar_eps - W'(gbar_eps) on ``grid``.

    Outside the cutoff transition gbar is either g (an exact solution) or
    the constant 1, so R is set to 0 there rather than to rounding noise.
    """
    from .mesh import Field

    prof = CutoffProfile(eps, omega)
    t = grid.t
    s = t / eps
    r = np.zeros_like(t)
    active = (s > prof.lam) & (s < 2.0 * prof.lam)
    if np.any(active):
        sa = s[active]
        d = prof.deviation(sa)
        r[active] = prof(sa, 2) - (1.0 + d) * d * (2.0 + d)
    c = float(np.max(np.abs(r))) / eps**omega
    return Field(grid, r, dirichlet=(False, False), meta={"C": c, "support": prof.support})


@dataclass(frozen=True)
class Constants:
    sigma0: float
    kappa0: float
    sigma: float
    error_bound: float


def _quad(fun, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fun, a, b, epsabs=0.1 * tol, epsrel=0.0, limit=400)
        except integrate.IntegrationWarning as exc:
            raise ToleranceNotReached(str(exc)) from exc
    return val, err


def compute_constants(quadrature_tol: float = 1e-12) -> Constants:
    """sigma0 = int_0^inf g'^2, kappa0 = int_0^inf t g'^2 and sigma = g'(0).

    Integrated adaptively on [0, T_STAR]; the tail is bounded using
    g'(t) <= 2 sqrt2 exp(-sqrt2 t).
    """
    if quadrature_tol <= 0:
        raise ValueError("quadrature_tol must be positive")
    gd = lambda t: eval_heteroclinic(t, 1)
    s0, e0 = _quad(lambda t: gd(t) ** 2, 0.0, T_STAR, quadrature_tol)
    k0, e1 = _quad(lambda t: t * gd(t) ** 2, 0.0, T_STAR, quadrature_tol)
    q = math.exp(-2.0 * SQRT2 * T_STAR)
    tail0 = 2.0 * SQRT2 * q
    tail1 = 8.0 * q * (T_STAR / (2.0 * SQRT2) + 1.0 / 8.0)
    err = max(e0 + tail0, e1 + tail1)
    if err > quadrature_tol:
        raise ToleranceNotReached(f"quadrature error {err:.2e} > {quadrature_tol:.2e}")
    return Constants(sigma0=s0, kappa0=k0, sigma=float(gd(0.0)), error_bound=err)
