"""Catalog of symmetric manifolds with boundary in Fermi coordinates.

Orientation: ``t >= 0`` is the distance from the boundary Y measured along
the normal pointing into the solution domain.  The Laplacian splits as
``Delta = Delta_t - H_t d_t + d_t^2`` so that, with ``J(t)`` the relative
area element of the parallel hypersurface,

    H_t = -d_t log J(t),   dH/dt(0) = |A_Y|^2 + Ric(nu, nu).

With this convention the disk has H > 0 and the minimizer's Neumann data is
``1/(eps sqrt2) - (2/3) H + ...``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class FocalDistanceError(ValueError):
    pass


KINDS = ("slab", "disk", "annulus", "sphere_cap", "sphere_band", "revolution")


def _sphere_area(k: int) -> float:
    """Area of the unit k-sphere."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


@dataclass(frozen=True)
class CurvatureData:
    H0: float
    Hdot0: float
    A_norm_sq: float
    Ric_nn: float


@dataclass(frozen=True)
class Geometry:
    """Radially symmetric domain described by its Fermi data.

    Parameters by kind::

        slab         L                         [0, L], walls at both ends
        disk         R, dim=2                  ball of radius R, to the center
        annulus      R_in, R_out, side         side = "inner" | "outer"
        sphere_cap   n, tau                    {x_{n+1} > tau} in S^n, to the pole
        sphere_band  n, tau                    {|x_{n+1}| < tau}, from x_{n+1} = tau
        revolution   x, r, x0                  surface of revolution r(x), from x = x0
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        p = self.params
        need = {
            "slab": ("L",), "disk": ("R",), "annulus": ("R_in", "R_out", "side"),
            "sphere_cap": ("n", "tau"), "sphere_band": ("n", "tau"),
            "revolution": ("x", "r"),
        }[self.kind]
        missing = [k for k in need if k not in p]
        if missing:
            raise ValueError(f"{self.kind} geometry missing {missing}")
        if self.kind in ("sphere_cap", "sphere_band"):
            if not -1.0 < p["tau"] < 1.0 or int(p["n"]) < 2:
                raise ValueError("sphere needs n >= 2 and |tau| < 1")
        if self.kind == "sphere_band" and p["tau"] <= 0:
            raise ValueError("sphere band needs tau > 0")
        if self.kind == "annulus":
            if not 0 < p["R_in"] < p["R_out"] or p["side"] not in ("inner", "outer"):
                raise ValueError("annulus needs 0 < R_in < R_out and side inner|outer")
        if self.kind in ("slab", "disk") and p[{"slab": "L", "disk": "R"}[self.kind]] <= 0:
            raise ValueError("length parameters must be positive")

    # constructors -------------------------------------------------------
    @classmethod
    def slab(cls, L: float = 1.0):
        return cls("slab", {"L": float(L)})

    @classmethod
    def disk(cls, R: float = 1.0, dim: int = 2):
        return cls("disk", {"R": float(R), "dim": int(dim)})

    @classmethod
    def annulus(cls, R_in: float, R_out: float, side: str = "inner"):
        return cls("annulus", {"R_in": float(R_in), "R_out": float(R_out), "side": side})

    @classmethod
    def sphere_cap(cls, n: int = 2, tau: float = 0.0):
        return cls("sphere_cap", {"n": int(n), "tau": float(tau)})

    @classmethod
    def sphere_band(cls, n: int = 2, tau: float = 0.5):
        return cls("sphere_band", {"n": int(n), "tau": float(tau)})

    @classmethod
    def revolution(cls, x, r, x0: float | None = None):
        x = tuple(float(v) for v in x)
        return cls("revolution", {"x": x, "r": tuple(float(v) for v in r),
                                  "x0": float(x[0] if x0 is None else x0)})

    @property
    def key(self) -> str:
        if self.kind == "revolution":
            return f"revolution(x0={self.params['x0']:g})"
        items = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({items})"

    # internals ----------------------------------------------------------
    @property
    def _theta0(self) -> float:
        return math.asin(self.params["tau"])

    @property
    def _m(self) -> int:
        """Dimension of the boundary hypersurface Y."""
        if self.kind == "disk":
            return self.params.get("dim", 2) - 1
        if self.kind in ("sphere_cap", "sphere_band"):
            return int(self.params["n"]) - 1
        return 1

    def _rev(self):
        return _revolution_data(self.params["x"], self.params["r"], self.params["x0"])

    # public queries ------------------------------------------------------
    @property
    def focal_distance(self) -> float:
        """First t > 0 where the parallel hypersurfaces degenerate."""
        p = self.params
        if self.kind == "slab":
            return math.inf
        if self.kind == "disk":
            return p["R"]
        if self.kind == "annulus":
            return math.inf if p["side"] == "inner" else p["R_out"]
        if self.kind == "sphere_cap":
            return math.pi / 2 - self._theta0
        if self.kind == "sphere_band":
            return self._theta0 + math.pi / 2
        return self._rev().focal

    @property
    def domain_length(self) -> float:
        """Extent of the radial domain in t."""
        p = self.params
        if self.kind == "slab":
            return p["L"]
        if self.kind == "annulus":
            return p["R_out"] - p["R_in"]
        if self.kind == "sphere_band":
            return 2.0 * self._theta0
        if self.kind == "revolution":
            return self._rev().collar
        return self.focal_distance

    @property
    def far_end(self) -> str:
        """Boundary condition at ``domain_length``.

        ``dirichlet``: a second boundary component; ``regular``: the area
        element vanishes (center or pole); ``pinned``: truncated collar.
        """
        if self.kind in ("disk", "sphere_cap"):
            return "regular"
        if self.kind == "revolution":
            return "pinned"
        return "dirichlet"

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        lim = self.domain_length if self.far_end != "regular" else self.focal_distance
        if np.any(t < -1e-14) or np.any(t > lim * (1 + 1e-12)):
            raise FocalDistanceError(f"t outside the Fermi collar [0, {lim:g}]")
        return t

    def area_element(self, t):
        """J(t), the area of Y_t relative to Y (J(0) = 1)."""
        t = self._check(t)
        p, m = self.params, self._m
        if self.kind == "slab":
            out = np.ones_like(t)
        elif self.kind == "disk":
            out = np.clip(1.0 - t / p["R"], 0.0, None) ** m
        elif self.kind == "annulus":
            out = (1.0 + t / p["R_in"]) if p["side"] == "inner" else (1.0 - t / p["R_out"])
        elif self.kind == "sphere_cap":
            th = self._theta0
            out = np.clip(np.cos(th + t) / math.cos(th), 0.0, None) ** m
        elif self.kind == "sphere_band":
            th = self._theta0
            out = (np.cos(th - t) / math.cos(th)) ** m
        else:
            out = self._rev().J(t)
        return out

    def mean_curvature(self, t, order: int = 0):
        """H_t (order 0) or dH_t/dt (order 1)."""
        t = self._check(t)
        p, m = self.params, self._m
        with np.errstate(divide="ignore"):
            if self.kind == "slab":
                out = np.zeros_like(t)
            elif self.kind == "disk":
                out = m / (p["R"] - t) if order == 0 else m / (p["R"] - t) ** 2
            elif self.kind == "annulus":
                if p["side"] == "inner":
                    r = p["R_in"] + t
                    out = -1.0 / r if order == 0 else 1.0 / r**2
                else:
                    r = p["R_out"] - t
                    out = 1.0 / r if order == 0 else 1.0 / r**2
            elif self.kind == "sphere_cap":
                a = self._theta0 + t
                out = m * np.tan(a) if order == 0 else m / np.cos(a) ** 2
            elif self.kind == "sphere_band":
                a = self._theta0 - t
                out = -m * np.tan(a) if order == 0 else m / np.cos(a) ** 2
            else:
                out = self._rev().H(t, order)
        return out if np.ndim(out) else float(out)

    def curvature_data(self) -> CurvatureData:
        p, m = self.params, self._m
        if self.kind == "slab":
            return CurvatureData(0.0, 0.0, 0.0, 0.0)
        if self.kind == "disk":
            k = 1.0 / p["R"]
            return CurvatureData(m * k, m * k * k, m * k * k, 0.0)
        if self.kind == "annulus":
            if p["side"] == "inner":
                k = 1.0 / p["R_in"]
                return CurvatureData(-k, k * k, k * k, 0.0)
            k = 1.0 / p["R_out"]
            return CurvatureData(k, k * k, k * k, 0.0)
        if self.kind in ("sphere_cap", "sphere_band"):
            tn = math.tan(self._theta0)
            h0 = m * tn if self.kind == "sphere_cap" else -m * tn
            return CurvatureData(h0, m * (1.0 + tn * tn), m * tn * tn, float(m))
        rv = self._rev()
        return CurvatureData(rv.H0, rv.Hdot0, rv.H0**2, rv.K0)

    @property
    def boundary_area(self) -> float:
        """|Y|, used to turn radial energies into total energies."""
        p, m = self.params, self._m
        if self.kind == "slab":
            return 1.0
        if self.kind == "disk":
            return _sphere_area(m) * p["R"] ** m
        if self.kind == "annulus":
            return 2.0 * math.pi * (p["R_in"] if p["side"] == "inner" else p["R_out"])
        if self.kind in ("sphere_cap", "sphere_band"):
            return _sphere_area(m) * math.cos(self._theta0) ** m
        return 2.0 * math.pi * self._rev().r0

    def describe(self) -> dict:
        c = self.curvature_data()
        return {"kind": self.kind, "H0": c.H0, "Hdot0": c.Hdot0,
                "A_norm_sq": c.A_norm_sq, "Ric_nn": c.Ric_nn,
                "focal_distance": self.focal_distance,
                "domain_length": self.domain_length, "far_end": self.far_end}


def radial_reduction(geom: Geometry):
    """Return callables (a, b) with eps^2 Delta f = eps^2 (a f'' + b f') for radial f."""
    return (lambda t: np.ones_like(np.asarray(t, dtype=float)),
            lambda t: -np.asarray(geom.mean_curvature(t), dtype=float))


def jacobi_apply(geom: Geometry, eta) -> np.ndarray:
    """J_Y eta = Delta_Y eta + (|A|^2 + Ric(nu, nu)) eta.

    ``eta`` holds samples on a uniform angular grid of the cross-section
    circle (spectral Laplacian), or a scalar for a constant field.  For
    boundaries of dimension > 1 only constant fields are supported.
    """
    c = geom.curvature_data()
    pot = c.A_norm_sq + c.Ric_nn
    eta_arr = np.asarray(eta, dtype=float)
    if eta_arr.ndim == 0:
        return pot * eta_arr
    if np.ptp(eta_arr) == 0.0:
        return pot * eta_arr
    if geom._m != 1:
        raise NotImplementedError("non-constant eta only on one-dimensional Y")
    radius = geom.boundary_area / (2.0 * math.pi)
    if geom.kind == "slab":
        radius = 1.0  # flat circle of length 2 pi as cross-section model
    k = np.fft.rfftfreq(eta_arr.size, d=1.0 / eta_arr.size)
    lap = np.fft.irfft(-(k**2) * np.fft.rfft(eta_arr), n=eta_arr.size) / radius**2
    return lap + pot * eta_arr


@dataclass
class _RevData:
    J: object
    H: object
    H0: float
    Hdot0: float
    K0: float
    r0: float
    focal: float
    collar: float


_REV_CACHE: dict = {}


def _revolution_data(x, r, x0):
    key = (x, r, x0)
    if key in _REV_CACHE:
        return _REV_CACHE[key]
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    spl = CubicSpline(x, r)
    xs = np.linspace(x0, x[-1], 20001)
    d1, d2 = spl(xs, 1), spl(xs, 2)
    s = cumulative_simpson(np.sqrt(1.0 + d1**2), x=xs, initial=0.0)
    x_of_s = CubicSpline(s, xs)
    r0 = float(spl(x0))
    rr = spl(xs)
    hit = np.nonzero(rr <= 0)[0]
    focal = float(s[hit[0]]) if hit.size else math.inf
    collar = min(float(s[-1]), 0.5 * focal) if hit.size else float(s[-1])
    if r0 <= 0:
        raise ValueError("profile radius must be positive at x0")

    def J(t):
        return spl(x_of_s(t)) / r0

    def H(t, order=0):
        xv = x_of_s(t)
        a, b, c = spl(xv), spl(xv, 1), spl(xv, 2)
        q = 1.0 + b * b
        rs = b / np.sqrt(q)            # dr/ds
        rss = c / q**2                  # d^2 r/ds^2
        if order == 0:
            return -rs / a
        return -rss / a + (rs / a) ** 2

    q0 = 1.0 + d1[0] ** 2
    h0 = float(-(d1[0] / math.sqrt(q0)) / r0)
    k0 = float(-(d2[0] / q0**2) / r0)
    data = _RevData(J, H, h0, k0 + h0 * h0, k0, r0, focal, collar)
    _REV_CACHE[key] = data
    return data


def load_geometry(path) -> Geometry:
    """Read a flat ``key = value`` geometry file (TOML syntax)."""
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    return geometry_from_mapping(cfg)


def geometry_from_mapping(cfg: dict) -> Geometry:
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind is None:
        raise ValueError("geometry config needs a 'kind' key")
    if kind == "revolution":
        return Geometry.revolution(cfg["x"], cfg["r"], cfg.get("x0"))
    if kind == "disk":
        cfg.setdefault("dim", 2)
    return Geometry(kind, cfg)
