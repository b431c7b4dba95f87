"""
Littlewood-Paley filter banks, Lipschitz and bmo norm estimators, and
smooth polynomial cutoffs.

All smooth profiles are built from one ramp, the normalized primitive of
the bump exp(-1/(1 - u^2)) on (-1, 1):

    smooth_step(t) = int_{-1}^{2t-1} bump / int_{-1}^{1} bump

which is 0 for t <= 0, 1 for t >= 1 and C^infinity.  Radial profiles
(frequency side):

    low_pass(r)  = 1 on [0, 1], decreasing to 0 on [1, 2]
    band(r)      = 1 on [3/4, 3/2], supported in [1/2, 2]

phi_0 = low_pass(|xi|), phi_j = band(2^-j |xi|) for j >= 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GeometryError
from .grid import Grid, SampledField, apply_multiplier, distance_from, monomial

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)

# Sup bounds of the cutoff chi and its first two derivatives (any dimension).
CUTOFF_DERIVATIVE_BOUNDS = {0: 1.0, 1: 1.66, 2: 8.1}


def _bump(u):
    out = np.zeros_like(u, dtype=float)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _left_integral(v):
    # int_{-1}^{v} bump, Gauss-Legendre on [-1, v]
    half = (v[..., None] + 1.0) / 2.0
    u = -1.0 + half * (_GL_NODES + 1.0)
    return np.sum(_GL_WEIGHTS * _bump(u), axis=-1) * half[..., 0]


_HALF_MASS = float(_left_integral(np.array([0.0]))[0])


def smooth_step(t) -> np.ndarray:
    """C^infinity ramp from 0 (t <= 0) to 1 (t >= 1), with S(1 - t) = 1 - S(t)."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    ramp = (t > 0) & (t < 1)
    if ramp.any():
        tr = t[ramp]
        low = tr <= 0.5
        vals = np.empty_like(tr)
        vals[low] = _left_integral(2 * tr[low] - 1) / (2 * _HALF_MASS)
        vals[~low] = 1.0 - _left_integral(2 * (1 - tr[~low]) - 1) / (2 * _HALF_MASS)
        out[ramp] = vals
    return out


def low_pass(r) -> np.ndarray:
    """Radial profile equal to 1 on [0, 1] and 0 on [2, inf)."""
    return 1.0 - smooth_step(np.asarray(r, dtype=float) - 1.0)


def band(r) -> np.ndarray:
    """Radial profile equal to 1 on [3/4, 3/2] and supported in [1/2, 2]."""
    r = np.asarray(r, dtype=float)
    return smooth_step(4.0 * (r - 0.5)) * (1.0 - smooth_step(2.0 * (r - 1.5)))


# -- filter banks -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Frequency-side profiles phi_0 .. phi_{j_max} on a grid (FFT order)."""

    grid: Grid
    j_max: int
    filters: tuple

    def apply(self, f: SampledField, j: int) -> SampledField:
        """phi_j * f."""
        return apply_multiplier(f, self.filters[j], real=True)


def max_band(grid: Grid) -> int:
    """Largest j_max whose top band fits below the Nyquist frequency."""
    return int(math.floor(math.log2(grid.nyquist) - 1 + 1e-12))


def build_filter_bank(grid: Grid, j_max: int) -> FilterBank:
    if j_max < 1:
        raise GeometryError(f"j_max must be a positive integer, got {j_max}")
    if j_max > max_band(grid):
        raise GeometryError(
            f"j_max={j_max} exceeds log2(pi N/(2L)) - 1 = {math.log2(grid.nyquist) - 1:.3f} for {grid}"
        )
    r = grid.freq_norm
    filters = [low_pass(r)] + [band(r / 2**j) for j in range(1, j_max + 1)]
    for phi in filters:
        phi.setflags(write=False)
    return FilterBank(grid, int(j_max), tuple(filters))


def export_filter_profiles(bank: FilterBank, path, samples: int = 512) -> None:
    """Write the radial profiles phi_j(|xi|) on [0, Nyquist] as CSV."""
    r = np.linspace(0.0, bank.grid.nyquist, samples)
    cols = [low_pass(r)] + [band(r / 2**j) for j in range(1, bank.j_max + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi"] + [f"phi_{j}" for j in range(bank.j_max + 1)])
        for i in range(samples):
            w.writerow([repr(float(r[i]))] + [repr(float(c[i])) for c in cols])


class LipschitzNorm(NamedTuple):
    value: float
    profile: tuple
    argmax: int


def lipschitz_norm(f: SampledField, s: float, bank: FilterBank) -> LipschitzNorm:
    """
    sup_j 2^{js} ||phi_j * f||_inf over the bank, with the per-band profile.

    The profile entries are 2^{js} ||phi_j * f||_inf for j = 0..j_max.
    """
    if s < 0:
        raise ValueError(f"smoothness s must be nonnegative, got {s}")
    if f.grid != bank.grid:
        raise GeometryError("field and filter bank live on different grids")
    spectrum = np.fft.fftn(f.values)
    profile = []
    for j, phi in enumerate(bank.filters):
        band_vals = np.fft.ifftn(phi * spectrum)
        profile.append(2.0 ** (j * s) * float(np.max(np.abs(band_vals))))
    k = int(np.argmax(profile))
    return LipschitzNorm(profile[k], tuple(profile), k)


# -- bmo ----------------------------------------------------------------------


@dataclass(frozen=True)
class BallLattice:
    """Radii (in length units) and the index stride of ball centres."""

    radii: tuple
    stride: int = 4

    @classmethod
    def dyadic(cls, grid: Grid, stride: int = 4) -> "BallLattice":
        """Radii 2^k h for k = 0..log2(L/h)."""
        h = grid.spacing
        k_top = int(math.floor(math.log2(grid.half_width / h) + 1e-12))
        return cls(tuple(2**k * h for k in range(k_top + 1)), stride)


class BmoNorm(NamedTuple):
    value: float
    large_ball: float
    small_ball: float
    rows: tuple  # (centre index, radius, value, regime)


def _offsets(grid: Grid, radius: float) -> np.ndarray:
    m = int(math.floor(radius / grid.spacing + 1e-9))
    rng = np.arange(-m, m + 1)
    cube = np.stack(np.meshgrid(*([rng] * grid.dim), indexing="ij"), axis=-1).reshape(-1, grid.dim)
    keep = np.sqrt(np.sum((cube * grid.spacing) ** 2, axis=1)) <= radius * (1 + 1e-12)
    return cube[keep]


def ball_statistic(f: SampledField, centre_index, radius: float, oscillation: bool) -> float:
    """
    Average of |f| (or of |f - f_B|) over the closed lattice ball of the
    given radius around a lattice point; indices wrap around the torus.
    """
    grid = f.grid
    idx = (np.asarray(centre_index)[None, :] + _offsets(grid, radius)) % grid.samples_per_axis
    vals = f.values[tuple(idx.T)]
    if oscillation:
        return float(np.mean(np.abs(vals - vals.mean())))
    return float(np.mean(np.abs(vals)))


def bmo_norm(f: SampledField, ball_lattice: BallLattice | None = None) -> BmoNorm:
    """
    sup_{r >= 1} avg_B |f| + sup_{r < 1} avg_B |f - f_B| over a finite ball family.
    """
    grid = f.grid
    lattice = ball_lattice or BallLattice.dyadic(grid)
    if not lattice.radii:
        raise GeometryError("bmo_norm needs a nonempty ball family")
    axis_idx = np.arange(0, grid.samples_per_axis, lattice.stride)
    centres = np.stack(np.meshgrid(*([axis_idx] * grid.dim), indexing="ij"), axis=-1).reshape(-1, grid.dim)
    large = small = 0.0
    rows = []
    chunk = 256
    for radius in lattice.radii:
        offs = _offsets(grid, radius)
        small_regime = radius < 1
        for lo in range(0, len(centres), chunk):
            cs = centres[lo : lo + chunk]
            idx = (cs[:, None, :] + offs[None, :, :]) % grid.samples_per_axis
            vals = f.values[tuple(np.moveaxis(idx, -1, 0))]
            if small_regime:
                stat = np.mean(np.abs(vals - vals.mean(axis=1, keepdims=True)), axis=1)
            else:
                stat = np.mean(np.abs(vals), axis=1)
            for c, v in zip(cs, stat):
                rows.append((tuple(int(i) for i in c), float(radius), float(v), "small" if small_regime else "large"))
            if small_regime:
                small = max(small, float(stat.max()))
            else:
                large = max(large, float(stat.max()))
    return BmoNorm(large + small, large, small, tuple(rows))


# -- cutoffs --------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffSpec:
    """chi = 1 on B(center, inner), 0 outside B(center, outer)."""

    center: tuple
    inner: float = 2.0
    outer: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not 0 < self.inner < self.outer:
            raise ValueError("cutoff radii must satisfy 0 < inner < outer")


def make_cutoff(spec: CutoffSpec, grid: Grid) -> SampledField:
    if len(spec.center) != grid.dim:
        raise GeometryError("cutoff centre dimension does not match grid")
    if not grid.contains_ball(spec.center, spec.outer):
        raise GeometryError(f"B({spec.center}, {spec.outer}) does not fit in {grid}")
    d = distance_from(grid, spec.center)
    width = spec.outer - spec.inner
    return SampledField(grid, 1.0 - smooth_step((d - spec.inner) / width))


def make_poly_cutoff(x0, alpha, grid: Grid, spec: CutoffSpec | None = None) -> SampledField:
    """g_{x0, alpha}(x) = (x - x0)^alpha chi(x)."""
    spec = spec or CutoffSpec(tuple(np.atleast_1d(x0)))
    chi = make_cutoff(spec, grid)
    return SampledField(grid, monomial(grid, spec.center, tuple(alpha)) * chi.values)
