"""Half-line problem F'' - W''(g) F = phi, F(0) = 0, F bounded at infinity.

Solved by variation of parameters around the kernel element g'::

    F = v g',   v' = g'^{-2} I(t),   I(t) = a0 + int_0^t phi g' = -int_t^inf phi g'

``I`` is accumulated from the far end so that it keeps full relative
accuracy as it decays; ``v'`` is formed in log space because g'^{-2}
grows like exp(2 sqrt2 t).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from .profiles import SQRT2, d2W, eval_heteroclinic, log_gdot, one_minus_g


class NonDecayingRhs(ValueError):
    pass


LIBRARY_KINDS = ("heteroclinic_g", "gdot", "t_times_gdot", "zero")


@dataclass(frozen=True)
class RhsSpec:
    """Right-hand side phi.

    ``gamma`` is the declared decay rate.  ``heteroclinic_g`` is the one
    library kind that does not decay; it tends to ``limit = 1`` and the
    solution then tends to ``-limit / W''(1) = -1/2``.
    """

    kind: str
    func: Callable | None = None
    gamma: float = math.inf
    limit: float = 0.0

    @classmethod
    def library(cls, kind: str) -> "RhsSpec":
        aliases = {"g": "heteroclinic_g", "tgdot": "t_times_gdot"}
        kind = aliases.get(kind, kind)
        if kind == "heteroclinic_g":
            return cls(kind, gamma=0.0, limit=1.0)
        if kind == "gdot":
            return cls(kind, gamma=SQRT2)
        if kind == "t_times_gdot":
            # t exp(-sqrt2 t) <= K exp(-gamma t) for every gamma < sqrt2
            return cls(kind, gamma=1.3)
        if kind == "zero":
            return cls(kind)
        raise ValueError(f"unknown RHS kind {kind!r}")

    @classmethod
    def custom(cls, func: Callable, gamma: float) -> "RhsSpec":
        if not gamma > 0:
            raise ValueError("custom RHS needs a declared decay rate gamma > 0")
        return cls("custom", func=func, gamma=float(gamma))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "heteroclinic_g":
            return eval_heteroclinic(t, 0)
        if self.kind == "gdot":
            return eval_heteroclinic(t, 1)
        if self.kind == "t_times_gdot":
            return t * eval_heteroclinic(t, 1)
        if self.kind == "zero":
            return np.zeros_like(t)
        return np.asarray(self.func(t), dtype=float) * np.ones_like(t)

    def tail(self, t: float) -> float:
        """int_t^inf phi g' ds (closed form where available)."""
        if self.kind == "zero":
            return 0.0
        d = float(one_minus_g(t))
        if self.kind == "heteroclinic_g":
            return d * (2.0 - d) / 2.0
        if self.kind == "gdot":
            return (d * d - d**3 / 3.0) / SQRT2
        # exponential-tail estimate phi(t) g'(t) / (gamma_eff + sqrt2)
        rate = (min(self.gamma, SQRT2) if self.kind == "custom" else SQRT2) + SQRT2
        return float(self(t) * eval_heteroclinic(t, 1)) / rate

    def check_decay(self, t0: float, t_max: float) -> None:
        if self.kind in LIBRARY_KINDS:
            return
        t = np.linspace(t0, t_max, 2001)
        phi = self(t)
        if not np.all(np.isfinite(phi)):
            raise NonDecayingRhs("RHS is not finite on the sampled tail")
        env = np.abs(phi) * np.exp(self.gamma * (t - t0))
        k = max(float(np.max(env[t <= t0 + 5.0])), 1e-300)
        if np.max(env) > 100.0 * k and np.max(np.abs(phi)) > 1e-250:
            raise NonDecayingRhs(
                f"|phi| exceeds K exp(-{self.gamma:g} t) on the sampled tail"
            )


@dataclass
class Profile:
    t: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    d2F: np.ndarray
    rhs: RhsSpec
    a0: float
    inner: np.ndarray  # I(t) = a0 + int_0^t phi g'
    limit: float = 0.0
    decay_rate: float = math.nan
    residual: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    @property
    def boundary_slope(self) -> float:
        return float(self.dF[0])

    @functools.cached_property
    def _spline(self):
        return CubicHermiteSpline(self.t, self.F, self.dF, extrapolate=False)

    def __call__(self, s, order: int = 0):
        """Evaluate F or a derivative at arbitrary s >= 0."""
        s = np.asarray(s, dtype=float)
        inside = s <= self.t_max
        out = np.empty_like(s)
        si = np.clip(s[inside], 0.0, self.t_max)
        if order == 0:
            out[inside] = self._spline(si)
        elif order == 1:
            out[inside] = self._spline(si, 1)
        elif order == 2:
            out[inside] = self.rhs(si) + d2W(eval_heteroclinic(si, 0)) * self._spline(si)
        else:
            raise ValueError("order must be 0, 1 or 2")
        # beyond t_max: exponential approach to the limit
        so = s[~inside]
        rate = self.decay_rate if np.isfinite(self.decay_rate) and self.decay_rate > 0 else SQRT2
        amp = (self.F[-1] - self.limit) * np.exp(-rate * (so - self.t_max))
        out[~inside] = (amp + self.limit) if order == 0 else amp * (-rate) ** order
        return out if out.ndim else float(out)


def _simpson_from_right(y: np.ndarray, h: float) -> np.ndarray:
    """int_t^{t_max} y for every node t."""
    return cumulative_simpson(y[::-1], dx=h, initial=0.0)[::-1]


def substitution_residual(p: Profile) -> float:
    """Max residual of the first-order system F' = dF, dF' = W''(g)F + phi.

    Uses 4th-order central differences of the samples, so it checks the
    stored samples independently of how they were produced.
    """
    t, h = p.t, p.t[1] - p.t[0]

    def d1(y):
        return (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12.0 * h)

    tc = t[2:-2]
    r1 = d1(p.F) - p.dF[2:-2]
    r2 = d1(p.dF) - d2W(eval_heteroclinic(tc, 0)) * p.F[2:-2] - p.rhs(tc)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def solve_halfline(rhs: RhsSpec, t_max: float = 40.0, n: int = 100_000) -> Profile:
    if t_max < 20:
        raise ValueError("t_max must be at least 20")
    if n < 1000:
        raise ValueError("n must be at least 1000")
    rhs.check_decay(5.0, t_max)

    t = np.linspace(0.0, t_max, n + 1)
    h = t_max / n
    lgd = log_gdot(t)
    gd = np.exp(lgd)
    phi = rhs(t)

    inner = -(_simpson_from_right(phi * gd, h) + rhs.tail(t_max))
    a0 = float(inner[0])
    nz = inner != 0.0
    mag = np.zeros_like(t)
    mag[nz] = np.log(np.abs(inner[nz]))
    vdot = np.where(nz, np.sign(inner) * np.exp(mag - 2.0 * lgd), 0.0)
    v = cumulative_simpson(vdot, dx=h, initial=0.0)

    g = eval_heteroclinic(t, 0)
    F = v * gd
    F[0] = 0.0
    dF = np.where(nz, np.sign(inner) * np.exp(mag - lgd), 0.0) - SQRT2 * g * F
    d2F = phi + d2W(g) * F

    limit = -rhs.limit / 2.0
    p = Profile(t=t, F=F, dF=dF, d2F=d2F, rhs=rhs, a0=a0, inner=inner, limit=limit)
    p.decay_rate = verify_decay(p)[0]
    p.residual = substitution_residual(p)
    return p


def verify_decay(p: Profile, t0: float = 10.0, t1: float = 30.0):
    """Least-squares fit |F - limit| ~ C exp(-gamma t) on [t0, t1].

    Returns ``(gamma, C, t0)``; gamma is +inf for an identically zero tail.
    """
    t1 = min(t1, p.t_max)
    mask = (p.t >= t0) & (p.t <= t1)
    if np.count_nonzero(mask) < 100:
        raise ValueError("need at least 100 samples beyond t0")
    y = np.abs(p.F[mask] - p.limit)
    keep = y > 0
    if not np.any(keep):
        return math.inf, 0.0, t0
    slope, icpt = np.polyfit(p.t[mask][keep], np.log(y[keep]), 1)
    return float(-slope), float(math.exp(icpt)), t0


@functools.lru_cache(maxsize=16)
def library_profile(kind: str, t_max: float = 40.0, n: int = 100_000) -> Profile:
    """Cached solve for a library RHS kind."""
    return solve_halfline(RhsSpec.library(kind), t_max, n)


def solve_tau(t_max: float = 40.0, n: int = 100_000) -> Profile:
    """tau'' - W''(g) tau = t g'."""
    return solve_halfline(RhsSpec.library("t_times_gdot"), t_max, n)


def solve_w(rhs: str = "gdot", t_max: float = 40.0, n: int = 100_000) -> Profile:
    """First-order corrector w with RHS g' (default) or g."""
    return solve_halfline(RhsSpec.library(rhs), t_max, n)
