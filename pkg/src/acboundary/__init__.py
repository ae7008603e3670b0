"""Numerical checks of boundary-layer asymptotics for Dirichlet minimizers
of the Allen-Cahn energy on radially symmetric domains."""

__version__ = "0.1.0"

from .geometry import Geometry, load_geometry
from .profiles import KAPPA0, SIGMA, SIGMA0, compute_constants, eval_heteroclinic
from .minimizer import SolveConfig, minimize

__all__ = [
    "Geometry", "load_geometry", "KAPPA0", "SIGMA", "SIGMA0", "compute_constants",
    "eval_heteroclinic", "SolveConfig", "minimize", "__version__",
]
