"""
Uniform periodic grids on [-L, L)^n and the field operations built on them.

Every other module works with :class:`SampledField` values on a
:class:`Grid`.  Integrals are rectangle-rule sums with weight ``h**n``,
Fourier multipliers act through the FFT, and distances are the plain
Euclidean distances of the representatives in [-L, L)^n.  Experiments are
expected to keep all supports away from the torus boundary.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GeometryError, GridMismatchError

__all__ = [
    "Grid",
    "SampledField",
    "Ball",
    "make_grid",
    "quadrature",
    "lq_norm",
    "inner",
    "convolve",
    "moment",
    "annulus_mask",
    "ball_mask",
    "distance_from",
    "delta",
    "apply_multiplier",
    "fourier_coefficients",
    "monomial",
    "write_field",
    "read_field",
]


@dataclass(frozen=True)
class Grid:
    """
    Uniform periodic lattice on the torus [-L, L)^n.

    Parameters
    ----------
    dim : int
        Spatial dimension n.
    half_width : float
        Half side length L of the torus.
    samples_per_axis : int
        Even number of samples N along each axis.
    """

    dim: int
    half_width: float
    samples_per_axis: int

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.samples_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.samples_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.samples_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def nyquist(self) -> float:
        """Largest |frequency| along one axis, pi N / (2L)."""
        return math.pi * self.samples_per_axis / (2.0 * self.half_width)

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.samples_per_axis)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def points(self) -> np.ndarray:
        """Lattice points as an array of shape ``shape + (dim,)``."""
        return np.stack(self.coords, axis=-1)

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        """Angular frequencies of one axis in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.samples_per_axis, d=self.spacing)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.frequency_axis] * self.dim), indexing="ij"))

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Frequency lattice (FFT order) of shape ``shape + (dim,)``."""
        return np.stack(self.wavenumbers, axis=-1)

    @cached_property
    def freq_norm(self) -> np.ndarray:
        return np.sqrt(sum(k**2 for k in self.wavenumbers))

    def zeros(self) -> "SampledField":
        return SampledField(self, np.zeros(self.shape))

    def constant(self, c) -> "SampledField":
        return SampledField(self, np.full(self.shape, c))

    def field(self, func) -> "SampledField":
        """Sample ``func(*coords)`` on the lattice."""
        return SampledField(self, np.broadcast_to(func(*self.coords), self.shape))

    def contains_ball(self, center, radius) -> bool:
        """True when B(center, radius) lies inside [-L, L)^n without wrapping."""
        return all(abs(c) + radius <= self.half_width for c in center)


def make_grid(dim: int, half_width: float, samples_per_axis: int) -> Grid:
    """Build a :class:`Grid`, validating parity and positivity."""
    if dim not in (1, 2, 3):
        raise GeometryError(f"dim must be 1, 2 or 3, got {dim}")
    if not half_width > 0:
        raise GeometryError(f"half_width L must be positive, got {half_width}")
    n = int(samples_per_axis)
    if n != samples_per_axis or n % 2 != 0:
        raise GeometryError(f"samples_per_axis N must be an even integer, got {samples_per_axis}")
    if n < 8:
        raise GeometryError(f"samples_per_axis N must be at least 8, got {n}")
    return Grid(int(dim), float(half_width), n)


class SampledField:
    """
    Real or complex values sampled on a grid.

    The values array is copied on construction and made read-only, so a
    field never changes after it is built.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=np.result_type(values, np.float64), copy=True)
        if arr.shape != grid.shape:
            raise GridMismatchError(f"values shape {arr.shape} does not match grid shape {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SampledField is immutable")

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        return f"SampledField({kind}, dim={self.grid.dim}, N={self.grid.samples_per_axis}, L={self.grid.half_width})"

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def real(self) -> "SampledField":
        return SampledField(self.grid, self.values.real)

    @property
    def imag(self) -> "SampledField":
        return SampledField(self.grid, self.values.imag)

    def conj(self) -> "SampledField":
        return SampledField(self.grid, np.conj(self.values))

    def abs(self) -> "SampledField":
        return SampledField(self.grid, np.abs(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def restrict(self, mask) -> "SampledField":
        return SampledField(self.grid, np.where(mask, self.values, 0))

    def _coerce(self, other):
        if isinstance(other, SampledField):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return SampledField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return SampledField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return SampledField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return SampledField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return SampledField(self.grid, -self.values)


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(f"grid mismatch: {g} vs {f.grid}")


@dataclass(frozen=True)
class Ball:
    """Euclidean ball B(center, radius)."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise GeometryError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def measure(self) -> float:
        """Lebesgue measure of the ball."""
        n = self.dim
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius**n

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def max_annulus(self, grid: Grid) -> int:
        """Largest j with 2^j r_B <= L/2 and 2^j B inside the torus."""
        if self.radius > grid.half_width / 2 or not grid.contains_ball(self.center, self.radius):
            raise GeometryError(f"ball {self} does not fit in the half-torus of {grid}")
        j = 0
        while (
            2 ** (j + 1) * self.radius <= grid.half_width / 2
            and grid.contains_ball(self.center, 2 ** (j + 1) * self.radius)
        ):
            j += 1
        return j


def quadrature(f: SampledField):
    """Rectangle-rule integral ``h^n * sum(values)``."""
    total = f.grid.cell_volume * np.sum(f.values)
    return complex(total) if f.is_complex else float(total)


def lq_norm(f: SampledField, q: float, region=None) -> float:
    """
    L^q norm of ``f`` on the lattice, optionally restricted to a point mask.

    ``q = inf`` gives the maximum modulus over the mask.
    """
    if not (q >= 1 or q == math.inf):
        raise ValueError(f"q must be >= 1 or inf, got {q}")
    vals = np.abs(f.values)
    if region is not None:
        region = np.asarray(region, dtype=bool)
        if not region.any():
            raise GeometryError("lq_norm over an empty region")
        vals = vals[region]
    if q == math.inf:
        return float(np.max(vals))
    if q == 1:
        return float(f.grid.cell_volume * np.sum(vals))
    scale = np.max(vals)
    if scale == 0:
        return 0.0
    return float(scale * (f.grid.cell_volume * np.sum((vals / scale) ** q)) ** (1.0 / q))


def inner(f: SampledField, g: SampledField):
    """Hermitian pairing h^n sum f conj(g)."""
    _check_same_grid(f, g)
    val = f.grid.cell_volume * np.vdot(g.values, f.values)
    if not (f.is_complex or g.is_complex):
        return float(val.real)
    return complex(val)


def _fft(values):
    return np.fft.fftn(values)


def _ifft(values):
    return np.fft.ifftn(values)


def convolve(f: SampledField, g: SampledField) -> SampledField:
    """
    Periodic convolution ``(f*g)(x) = h^n sum_y f(y) g(x - y)``.

    Evaluated as transform, multiply, inverse transform.  ``g`` is read as
    a function of the lattice difference, so the sample of ``g`` at the
    origin sits at index N/2 of each axis.
    """
    _check_same_grid(f, g)
    centred = np.fft.ifftshift(g.values)
    out = f.grid.cell_volume * _ifft(_fft(f.values) * _fft(centred))
    if not (f.is_complex or g.is_complex):
        out = out.real
    return SampledField(f.grid, out)


def apply_multiplier(f: SampledField, symbol_values, real: bool = False) -> SampledField:
    """Apply a Fourier multiplier given by its values on the frequency lattice (FFT order)."""
    out = _ifft(symbol_values * _fft(f.values))
    if real and not f.is_complex:
        out = out.real
    return SampledField(f.grid, out)


def fourier_coefficients(f: SampledField) -> np.ndarray:
    """
    Samples of the continuous transform ``int f(x) e^{-i x.xi} dx`` on the
    frequency lattice, FFT order.
    """
    grid = f.grid
    phase = np.exp(1j * grid.half_width * sum(grid.wavenumbers))
    return grid.cell_volume * phase * _fft(f.values)


def distance_from(grid: Grid, center) -> np.ndarray:
    """Euclidean distance |x - center| of every lattice point."""
    center = np.atleast_1d(center)
    return np.sqrt(sum((x - c) ** 2 for x, c in zip(grid.coords, center)))


def ball_mask(grid: Grid, center, radius: float, closed: bool = False) -> np.ndarray:
    d = distance_from(grid, center)
    return d <= radius if closed else d < radius


def annulus_mask(grid: Grid, ball: Ball, j: int) -> np.ndarray:
    """
    Point mask of the dyadic annulus U_j(B).

    U_0(B) is B itself; for j >= 1 it is {2^(j-1) r <= |x - x_B| < 2^j r}.
    """
    if j < 0:
        raise GeometryError(f"annulus index must be nonnegative, got {j}")
    outer = 2**j * ball.radius
    if outer > grid.half_width / 2:
        raise GeometryError(
            f"annulus U_{j} of {ball} violates 2^j r_B <= L/2 ({outer} > {grid.half_width / 2})"
        )
    d = distance_from(grid, ball.center)
    if j == 0:
        return d < ball.radius
    return (d >= outer / 2) & (d < outer)


def monomial(grid: Grid, center, alpha) -> np.ndarray:
    """Values of (x - center)^alpha on the lattice."""
    center = np.atleast_1d(center)
    out = np.ones(grid.shape)
    for x, c, a in zip(grid.coords, center, alpha):
        if a:
            out = out * (x - c) ** a
    return out


def moment(f: SampledField, center, alpha):
    """Quadrature of (x - center)^alpha f(x)."""
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != f.grid.dim:
        raise ValueError(f"multi-index {alpha} does not match dimension {f.grid.dim}")
    if sum(alpha) > 8:
        raise ValueError("moments are limited to |alpha| <= 8")
    return quadrature(SampledField(f.grid, monomial(f.grid, center, alpha) * f.values))


def delta(grid: Grid, index=None) -> SampledField:
    """Discrete unit mass: value 1/h^n at one lattice point (the origin by default)."""
    if index is None:
        index = (grid.samples_per_axis // 2,) * grid.dim
    vals = np.zeros(grid.shape)
    vals[tuple(index)] = 1.0 / grid.cell_volume
    return SampledField(grid, vals)


# -- serialization ----------------------------------------------------------
#
# Binary layout (little endian):
#   8 bytes  magic b"HLFIELD1"
#   uint32   dim
#   uint32   N
#   float64  L
#   uint8    complex flag (0 real, 1 complex)
#   values   N^dim float64 in C order; complex values are interleaved (re, im)
#
# CSV layout: one header line
#   "# hardylab-field dim=<n> N=<N> L=<L> complex=<0|1>"
# followed by one value per line in C order ("re" or "re,im").

_MAGIC = b"HLFIELD1"
_HEADER = struct.Struct("<IIdB")


def write_field(path, f: SampledField) -> None:
    path = Path(path)
    g = f.grid
    flag = 1 if f.is_complex else 0
    if path.suffix == ".csv":
        lines = [f"# hardylab-field dim={g.dim} N={g.samples_per_axis} L={g.half_width!r} complex={flag}"]
        flat = f.values.ravel(order="C")
        if flag:
            lines += [f"{float(v.real)!r},{float(v.imag)!r}" for v in flat]
        else:
            lines += [repr(float(v)) for v in flat]
        path.write_text("\n".join(lines) + "\n")
        return
    flat = f.values.ravel(order="C")
    payload = flat.astype("<c16").view("<f8") if flag else flat.astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(g.dim, g.samples_per_axis, g.half_width, flag))
        fh.write(payload.tobytes())


def read_field(path) -> SampledField:
    path = Path(path)
    if path.suffix == ".csv":
        lines = path.read_text().splitlines()
        header = dict(tok.split("=") for tok in lines[0].lstrip("# ").split()[1:])
        grid = make_grid(int(header["dim"]), float(header["L"]), int(header["N"]))
        if header["complex"] == "1":
            vals = np.array([complex(*map(float, ln.split(","))) for ln in lines[1:]])
        else:
            vals = np.array([float(ln) for ln in lines[1:]])
        return SampledField(grid, vals.reshape(grid.shape))
    data = path.read_bytes()
    if data[:8] != _MAGIC:
        raise ValueError(f"{path} is not a hardylab field file")
    dim, n, half_width, flag = _HEADER.unpack_from(data, 8)
    grid = make_grid(dim, half_width, n)
    raw = np.frombuffer(data, dtype="<f8", offset=8 + _HEADER.size)
    vals = raw.view("<c16") if flag else raw
    return SampledField(grid, vals.reshape(grid.shape).astype(complex if flag else float))
