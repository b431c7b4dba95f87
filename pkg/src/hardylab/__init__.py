"""
hardylab: numerical experiments with local Hardy spaces h^p on a periodic grid.

Submodules
----------
grid       grids, sampled fields, quadrature, FFT convolution, moments
heat       heat semigroup, local maximal function, h^p quasinorm, decay fits
spaces     Littlewood-Paley banks, Lipschitz and bmo estimators, cutoffs
atoms      atoms, molecules and the molecule-to-atom decomposition
operators  kernel, multiplier and amplitude operators; kernel/symbol checks
harness    end-to-end experiments on operator boundedness
cli        the ``hardylab`` command
"""

from .errors import (
    BasisError,
    ConfigError,
    CostGuardError,
    DecompositionError,
    GeometryError,
    GridMismatchError,
    HardyLabError,
)
from .grid import Ball, Grid, SampledField, make_grid

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Grid",
    "SampledField",
    "make_grid",
    "HardyLabError",
    "GeometryError",
    "GridMismatchError",
    "BasisError",
    "DecompositionError",
    "CostGuardError",
    "ConfigError",
]
