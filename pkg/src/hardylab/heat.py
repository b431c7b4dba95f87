"""
Heat semigroup, local heat maximal function and the h^p quasinorm.

The semigroup is applied at time t^2 through the multiplier
exp(-t^2 |xi|^2).  The supremum over 0 < t < 1 in the maximal function
is replaced by a maximum over a finite geometric :class:`TimeGrid`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GeometryError
from .grid import Ball, SampledField, annulus_mask, apply_multiplier, distance_from

DEFAULT_K_MAX = 24
DEFAULT_RATIO = 2.0**-0.5
_TOP = 1.0 - 2.0**-10


@dataclass(frozen=True)
class TimeGrid:
    """Decreasing list of times in (0, 1) standing in for the open interval."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(t) for t in self.values)
        if not vals:
            raise ValueError("TimeGrid must be nonempty")
        if any(not (0.0 < t < 1.0) for t in vals):
            raise ValueError("TimeGrid entries must lie strictly inside (0, 1)")
        object.__setattr__(self, "values", tuple(sorted(set(vals), reverse=True)))

    @classmethod
    def geometric(cls, k_max: int = DEFAULT_K_MAX, ratio: float = DEFAULT_RATIO) -> "TimeGrid":
        """t_k = ratio^k (1 - 2^-10) for k = 0..k_max."""
        if not 0.0 < ratio < 1.0:
            raise ValueError(f"time ratio must lie in (0, 1), got {ratio}")
        return cls(tuple(ratio**k * _TOP for k in range(int(k_max) + 1)))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def heat_multiplier(grid, t: float) -> np.ndarray:
    return np.exp(-(t * t) * grid.freq_norm**2)


def heat_apply(f: SampledField, t: float) -> SampledField:
    """Apply e^{t^2 Delta} to ``f``."""
    if not t > 0:
        raise ValueError(f"heat time must be positive, got {t}")
    if t > 1:
        raise ValueError(f"heat time must not exceed 1, got {t}")
    return apply_multiplier(f, heat_multiplier(f.grid, t), real=True)


def maximal(f: SampledField, times: TimeGrid | None = None) -> SampledField:
    """Pointwise max over the time grid of |e^{t^2 Delta} f|."""
    times = times or TimeGrid.geometric()
    spectrum = np.fft.fftn(f.values)
    k2 = f.grid.freq_norm**2
    out = np.zeros(f.grid.shape)
    for t in times:
        np.maximum(out, np.abs(np.fft.ifftn(np.exp(-(t * t) * k2) * spectrum)), out=out)
    return SampledField(f.grid, out)


def hp_quasinorm(f: SampledField, p: float, times: TimeGrid | None = None) -> float:
    """(h^n sum (M f)^p)^(1/p), the discrete local Hardy quasinorm."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    m = maximal(f, times).values
    scale = m.max()
    if scale == 0:
        return 0.0
    return float(scale * (f.grid.cell_volume * np.sum((m / scale) ** p)) ** (1.0 / p))


class DecayFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    radii: tuple
    sups: tuple


def annular_sups(f: SampledField, ball: Ball, j_range) -> list[tuple[int, float, float]]:
    """(j, 2^j r_B, max over U_j(B) of |f|) for every nonempty annulus in range."""
    rows = []
    vals = np.abs(f.values)
    for j in j_range:
        mask = annulus_mask(f.grid, ball, j)
        if mask.any():
            rows.append((j, 2**j * ball.radius, float(vals[mask].max())))
    return rows


def decay_fit(f: SampledField, ball: Ball, j_range=None) -> DecayFit:
    """
    Least-squares fit of log(annular sup of |f|) against log(2^j r_B).

    Only annuli outside 4B (j >= 3) are used.  By default every such
    annulus inside the torus bound is included.
    """
    if j_range is None:
        j_range = range(3, ball.max_annulus(f.grid) + 1)
    rows = [r for r in annular_sups(f, ball, j_range) if r[0] >= 3 and r[2] > 0]
    if len(rows) < 3:
        raise GeometryError(f"decay_fit needs at least 3 usable annuli outside 4B, got {len(rows)}")
    x = np.log([r[1] for r in rows])
    y = np.log([r[2] for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(intercept), r2, tuple(r[1] for r in rows), tuple(r[2] for r in rows))


def decay_constant(mf: SampledField, ball: Ball, s: float, p: float) -> float:
    """
    Smallest C with mf(x) <= C r^s |x - x_B|^{-(n+s)} |B|^{1-1/p} on the complement of 4B.
    """
    n = mf.grid.dim
    d = distance_from(mf.grid, ball.center)
    outside = d >= 4 * ball.radius
    scale = ball.radius**s * ball.measure() ** (1 - 1 / p)
    ratio = np.abs(mf.values[outside]) * d[outside] ** (n + s) / scale
    return float(ratio.max()) if ratio.size else 0.0


__all__ = [
    "TimeGrid",
    "heat_apply",
    "heat_multiplier",
    "maximal",
    "hp_quasinorm",
    "decay_fit",
    "decay_constant",
    "annular_sups",
    "DecayFit",
]
