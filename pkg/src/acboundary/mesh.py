"""Uniform 1D grids and sampled fields shared by the solver modules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform nodes ``start, start + h, ..., stop`` (``n`` intervals)."""

    start: float
    stop: float
    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("grid needs at least 4 intervals")
        if not self.stop > self.start:
            raise ValueError("grid nodes must be strictly increasing")

    @classmethod
    def covering(cls, start: float, stop: float, h_max: float) -> "Grid":
        """Coarsest uniform grid on [start, stop] with spacing at most h_max."""
        n = max(4, int(math.ceil((stop - start) / h_max * (1 - 1e-12))))
        return cls(float(start), float(stop), n)

    @property
    def h(self) -> float:
        return (self.stop - self.start) / self.n

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n + 1)

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.start, self.stop, self.n * factor)

    def check_resolution(self, eps: float, divisor: float = 20.0) -> None:
        if self.h * divisor > eps * (1 + 1e-9):
            raise GridTooCoarse(
                f"h = {self.h:.3g} exceeds eps/{divisor:g} = {eps / divisor:.3g}"
            )


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    dirichlet: tuple[bool, bool] = (True, False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError("field length does not match grid")
        if self.dirichlet[0] and self.values[0] != 0.0:
            raise ValueError("left Dirichlet boundary value must be exactly 0")
        if self.dirichlet[1] and self.values[-1] != 0.0:
            raise ValueError("right Dirichlet boundary value must be exactly 0")

    @property
    def t(self) -> np.ndarray:
        return self.grid.t
