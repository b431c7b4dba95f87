"""
Linear operators on grid fields and checks of their kernel and symbol bounds.

Three realizations share the :class:`OperatorHandle` contract:

* :class:`KernelOperator`   - ``sum_y K(x, y) f(y) h^n``; convolution kernels
  go through the FFT.
* :class:`MultiplierOperator` - ``ifft(m * fft f)``.
* :class:`AmplitudeOperator` - ``(1/N^n) sum_xi sum_y sigma(x, y, xi)
  e^{i(x-y).xi} f(y)``, the lattice version of the oscillatory double
  integral; the constant (2 pi)^-n dxi^n h^n equals 1/N^n, so sigma = 1
  is exactly the identity.

Kernels of non-explicit handles are read off as columns T(delta_y).
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CostGuardError, GeometryError, GridMismatchError
from .grid import Grid, SampledField, apply_multiplier, convolve, delta, inner
from .spaces import low_pass

__all__ = [
    "OperatorHandle",
    "KernelOperator",
    "MultiplierOperator",
    "AmplitudeOperator",
    "PointwiseOperator",
    "CzoiParams",
    "apply",
    "adjoint",
    "identity",
    "zero_operator",
    "scaled_identity",
    "local_riesz",
    "local_riesz_symbol",
    "truncated_riesz",
    "riesz_kernel",
    "amplitude_operator",
    "amplitude_class_check",
    "czoi_check",
    "operator_norm",
    "build_operator",
    "PROFILES",
    "export_profile",
]

AMPLITUDE_LIMITS = {1: 256, 2: 64}


def _check_grid(T, f):
    if f.grid != T.grid:
        raise GridMismatchError(f"operator grid {T.grid} does not match field grid {f.grid}")


class OperatorHandle:
    """Base class: a linear operator bound to one grid."""

    kind: str = ""

    def __init__(self, grid: Grid, name: str = ""):
        self.grid = grid
        self.name = name or type(self).__name__

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, N={self.grid.samples_per_axis}, dim={self.grid.dim})"

    def apply(self, f: SampledField) -> SampledField:
        raise NotImplementedError

    def adjoint(self) -> "OperatorHandle":
        raise NotImplementedError

    def __call__(self, f: SampledField) -> SampledField:
        return self.apply(f)

    @property
    def is_convolution(self) -> bool:
        return False

    def kernel_column(self, index) -> np.ndarray:
        """K(., y) for the lattice point y with the given index."""
        return self.apply(delta(self.grid, index)).values

    def kernel_sample(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """K(x, y) at lattice points (arrays of shape (P, n)); via columns by default."""
        g = self.grid
        xi = _to_index(g, x)
        yi = _to_index(g, y)
        out = np.zeros(len(x), dtype=complex)
        for key in {tuple(v) for v in yi}:
            col = self.kernel_column(key)
            sel = np.all(yi == key, axis=1)
            out[sel] = col[tuple(xi[sel].T)]
        return out


def _to_index(grid: Grid, pts) -> np.ndarray:
    idx = np.rint((np.asarray(pts) + grid.half_width) / grid.spacing).astype(int)
    return idx % grid.samples_per_axis


def apply(T: OperatorHandle, f: SampledField) -> SampledField:
    """Apply ``T`` to ``f``."""
    return T.apply(f)


def adjoint(T: OperatorHandle) -> OperatorHandle:
    """The operator T* with <Tf, g> = <f, T*g>."""
    return T.adjoint()


# -- kernels ------------------------------------------------------------------


class KernelOperator(OperatorHandle):
    """
    Operator given by a kernel.

    Pass either ``kernel(x, y)`` (arrays of shape (..., n)) or a convolution
    profile ``conv(z)``.  With ``pv=True`` the diagonal cell x = y is set to
    zero, the lattice realization of the principal value for odd kernels.
    """

    kind = "explicit_kernel"

    def __init__(self, grid, kernel: Callable | None = None, conv: Callable | None = None, pv=False, name=""):
        super().__init__(grid, name)
        if (kernel is None) == (conv is None):
            raise ValueError("give exactly one of kernel or conv")
        self._kernel = kernel
        self._conv = conv
        self.pv = pv
        self._matrix = None
        self._sampled = None

    @property
    def is_convolution(self) -> bool:
        return self._conv is not None

    def conv_samples(self) -> SampledField:
        """k(z) on the lattice (z = 0 at index N/2)."""
        if self._sampled is None:
            pts = self.grid.points
            vals = np.asarray(self._conv(pts))
            if self.pv:
                vals = vals.copy()
                vals[(self.grid.samples_per_axis // 2,) * self.grid.dim] = 0
            self._sampled = SampledField(self.grid, vals)
        return self._sampled

    def matrix(self) -> np.ndarray:
        """Dense kernel matrix K[x, y] over flattened lattice indices."""
        if self._matrix is None:
            g = self.grid
            if g.size > 4096:
                raise CostGuardError(f"dense kernel on {g.size} points refused")
            pts = g.points.reshape(-1, g.dim)
            if self._conv is not None:
                K = np.asarray(self._conv(pts[:, None, :] - pts[None, :, :]))
            else:
                K = np.asarray(self._kernel(pts[:, None, :], pts[None, :, :]))
            if self.pv:
                K = K.copy()
                np.fill_diagonal(K, 0)
            self._matrix = K
        return self._matrix

    def apply(self, f):
        _check_grid(self, f)
        if self._conv is not None:
            return convolve(f, self.conv_samples())
        out = (self.matrix() @ f.values.ravel()) * self.grid.cell_volume
        return SampledField(self.grid, out.reshape(self.grid.shape))

    def adjoint(self):
        if self._conv is not None:
            conv = self._conv
            return KernelOperator(self.grid, conv=lambda z: np.conj(conv(-z)), pv=self.pv, name=self.name + "*")
        kern = self._kernel
        return KernelOperator(self.grid, kernel=lambda x, y: np.conj(kern(y, x)), pv=self.pv, name=self.name + "*")

    def kernel_sample(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        vals = np.asarray(self._conv(x - y) if self._conv is not None else self._kernel(x, y))
        if self.pv:
            vals = np.where(np.all(np.abs(x - y) < 0.5 * self.grid.spacing, axis=-1), 0, vals)
        return vals


class PointwiseOperator(OperatorHandle):
    """Multiplication by a fixed field; kernel psi(x) delta(x - y)."""

    kind = "explicit_kernel"

    def __init__(self, grid, values, name=""):
        super().__init__(grid, name)
        self.values = np.asarray(values)

    def apply(self, f):
        _check_grid(self, f)
        return SampledField(self.grid, self.values * f.values)

    def adjoint(self):
        return PointwiseOperator(self.grid, np.conj(self.values), self.name + "*")


# -- multipliers ----------------------------------------------------------------


class MultiplierOperator(OperatorHandle):
    """Fourier multiplier given by its values on the frequency lattice (FFT order)."""

    kind = "multiplier"

    def __init__(self, grid, symbol, name=""):
        super().__init__(grid, name)
        m = np.broadcast_to(np.asarray(symbol), grid.shape)
        self.symbol = np.array(m)
        self.symbol.setflags(write=False)

    @classmethod
    def from_function(cls, grid, func, name=""):
        """Build from ``func(xi)`` with xi of shape grid.shape + (n,)."""
        return cls(grid, func(grid.frequencies), name)

    @property
    def is_convolution(self) -> bool:
        return True

    def apply(self, f):
        _check_grid(self, f)
        real = not np.iscomplexobj(self.symbol)
        return apply_multiplier(f, self.symbol, real=real)

    def adjoint(self):
        return MultiplierOperator(self.grid, np.conj(self.symbol), self.name + "*")


def identity(grid) -> MultiplierOperator:
    return MultiplierOperator(grid, 1.0, "identity")


def zero_operator(grid) -> MultiplierOperator:
    return MultiplierOperator(grid, 0.0, "zero")


def scaled_identity(grid, c) -> MultiplierOperator:
    return MultiplierOperator(grid, c, f"{c}*identity")


def local_riesz_symbol(xi, axis: int, phi_profile=low_pass) -> np.ndarray:
    """i (1 - phi(|xi|)) xi_axis / |xi|, with value 0 at xi = 0."""
    xi = np.asarray(xi, dtype=float)
    r = np.sqrt(np.sum(xi**2, axis=-1))
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, 1j * (1.0 - phi_profile(r)) * xi[..., axis] / safe, 0j)


def local_riesz(axis: int, grid: Grid, phi_profile=low_pass) -> MultiplierOperator:
    """Local Riesz transform r_axis as a multiplier handle."""
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for dimension {grid.dim}")
    return MultiplierOperator(grid, local_riesz_symbol(grid.frequencies, axis, phi_profile), f"local_riesz_{axis}")


def riesz_kernel(axis: int, Phi_profile=low_pass):
    """z -> z_axis / |z|^{n+1} Phi(|z|), zero at z = 0."""

    def k(z):
        z = np.asarray(z, dtype=float)
        n = z.shape[-1]
        r = np.sqrt(np.sum(z**2, axis=-1))
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, z[..., axis] / safe ** (n + 1) * Phi_profile(r), 0.0)

    return k


def truncated_riesz(axis: int, grid: Grid, Phi_profile=low_pass) -> KernelOperator:
    """Convolution with z_axis |z|^{-n-1} Phi(z); the diagonal cell is zero."""
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for dimension {grid.dim}")
    if grid.spacing > 1 / 16:
        raise GeometryError(f"truncated Riesz kernel needs h <= 1/16, got h = {grid.spacing}")
    return KernelOperator(grid, conv=riesz_kernel(axis, Phi_profile), pv=True, name=f"truncated_riesz_{axis}")


# -- amplitudes -----------------------------------------------------------------


class AmplitudeOperator(OperatorHandle):
    """
    Operator with amplitude sigma(x, y, xi).

    ``sigma`` takes three broadcastable arrays of shape (..., n).  The flags
    ``depends_x`` / ``depends_y`` select the evaluation path: a multiplier
    when neither is set, an O(N^{2n}) sum when only one is, and the full
    O(N^{3n}) sum otherwise.
    """

    kind = "amplitude"

    def __init__(self, grid, sigma, depends_x=True, depends_y=True, force=False, name=""):
        super().__init__(grid, name)
        self.sigma = sigma
        self.depends_x = depends_x
        self.depends_y = depends_y
        self.force = force

    @property
    def is_convolution(self) -> bool:
        return not (self.depends_x or self.depends_y)

    def _guard(self):
        limit = AMPLITUDE_LIMITS.get(self.grid.dim, 0)
        if not self.force and self.grid.samples_per_axis > limit:
            raise CostGuardError(
                f"amplitude evaluation refused for N={self.grid.samples_per_axis} in {self.grid.dim}D "
                f"(limit {limit}); pass force=True to override"
            )

    def multiplier_values(self) -> np.ndarray:
        g = self.grid
        zero = np.zeros(g.dim)
        return np.broadcast_to(self.sigma(zero, zero, g.frequencies), g.shape)

    def apply(self, f):
        _check_grid(self, f)
        g = self.grid
        if self.is_convolution:
            return apply_multiplier(f, self.multiplier_values())
        self._guard()
        pts = g.points.reshape(-1, g.dim)
        xi = g.frequencies.reshape(-1, g.dim)
        u = f.values.ravel()
        inv = 1.0 / g.size
        out = np.zeros(g.size, dtype=complex)
        chunk = max(1, 2**22 // g.size)
        if self.depends_x and not self.depends_y:
            U = np.exp(-1j * pts @ xi.T).T @ u  # U(xi) = sum_y e^{-i y.xi} u(y)
            for lo in range(0, g.size, chunk):
                x = pts[lo : lo + chunk]
                s = self.sigma(x[:, None, :], np.zeros(g.dim), xi[None, :, :])
                out[lo : lo + chunk] = (np.broadcast_to(s, (len(x), len(xi))) * np.exp(1j * x @ xi.T)) @ U * inv
        elif self.depends_y and not self.depends_x:
            V = np.zeros(len(xi), dtype=complex)
            for lo in range(0, len(xi), chunk):
                k = xi[lo : lo + chunk]
                s = np.broadcast_to(self.sigma(np.zeros(g.dim), pts[None, :, :], k[:, None, :]), (len(k), len(pts)))
                V[lo : lo + chunk] = (s * np.exp(-1j * k @ pts.T)) @ u
            out = np.exp(1j * pts @ xi.T) @ V * inv
        else:
            ey = np.exp(-1j * pts @ xi.T)  # [y, xi]
            for i, x in enumerate(pts):
                s = np.broadcast_to(self.sigma(x, pts[:, None, :], xi[None, :, :]), (len(pts), len(xi)))
                out[i] = np.sum((s * ey) @ np.exp(1j * xi @ x) * u) * inv
        return SampledField(g, out.reshape(g.shape))

    def adjoint(self):
        sigma = self.sigma
        return AmplitudeOperator(
            self.grid,
            lambda x, y, xi: np.conj(sigma(y, x, xi)),
            depends_x=self.depends_y,
            depends_y=self.depends_x,
            force=self.force,
            name=self.name + "*",
        )


def amplitude_operator(sigma, grid, depends_x=True, depends_y=True, force=False) -> AmplitudeOperator:
    return AmplitudeOperator(grid, sigma, depends_x, depends_y, force)


# -- norms and checks -----------------------------------------------------------


def operator_norm(T: OperatorHandle, iterations: int = 200, seed=0, rtol: float = 1e-12) -> float:
    """L^2 operator norm estimate from power iteration on T*T."""
    rng = np.random.default_rng(seed)
    Ts = T.adjoint()
    v = SampledField(T.grid, rng.standard_normal(T.grid.shape))
    v = v / math.sqrt(abs(inner(v, v)))
    est = 0.0
    for _ in range(iterations):
        w = Ts.apply(T.apply(v))
        nw = math.sqrt(abs(inner(w, w)))
        if nw == 0:
            return 0.0
        new = math.sqrt(nw)
        v = w / nw
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    # Rayleigh quotient of the final iterate never exceeds the true norm
    Tv = T.apply(v)
    return math.sqrt(abs(inner(Tv, Tv)))


@dataclass(frozen=True)
class CzoiParams:
    """Order M and Hoelder exponent eps of the kernel conditions."""

    M: int
    eps: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be a nonnegative integer, got {self.M}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")


def _ratio(full, coarse, floor=1e-300):
    if full <= floor and coarse <= floor:
        return 1.0
    if coarse <= floor:
        return math.inf
    return full / coarse


def _fd_offsets(gamma, step):
    """Central-difference stencil for d^gamma: {offset vector: weight}."""
    stencil = {tuple([0] * len(gamma)): 1.0}
    for axis, order in enumerate(gamma):
        for _ in range(order):
            nxt = {}
            for off, w in stencil.items():
                for sgn in (1, -1):
                    o = list(off)
                    o[axis] += sgn
                    nxt[tuple(o)] = nxt.get(tuple(o), 0.0) + sgn * w / (2 * step)
            stencil = nxt
    return stencil


def czoi_check(T: OperatorHandle, params: CzoiParams, probe: dict | None = None) -> dict:
    """
    Measure the constants of the size and smoothness kernel conditions.

    Probe geometry (``probe`` keys, defaults in brackets): base point
    ``y0`` [origin], Hoelder steps ``steps`` [(1, 2, 4)] in units of h,
    ``coarse_range`` [L/4] and ``full_range`` [L/2] for |x - y|.  A
    constant passes when adding the finer probes (the step h, the range
    beyond ``coarse_range``) changes it by a factor <= ``ratio_tol`` [1.1].

    Returns a plain dict with size constants split at |x - y| = 1, the
    per-shell profile, the Hoelder constant per step, the power-iteration
    L^2 norm and the pass flags.
    """
    g = T.grid
    n, h = g.dim, g.spacing
    probe = dict(probe or {})
    y0 = np.asarray(probe.get("y0", np.zeros(n)), dtype=float)
    steps = tuple(probe.get("steps", (1, 2, 4)))
    coarse_range = float(probe.get("coarse_range", g.half_width / 4))
    full_range = float(probe.get("full_range", g.half_width / 2))
    ratio_tol = float(probe.get("ratio_tol", 1.1))
    M, eps = params.M, params.eps

    x = g.points.reshape(-1, n)
    z = x - y0
    dist = np.sqrt(np.sum(z**2, axis=1))
    kvals = np.abs(T.kernel_sample(x, np.broadcast_to(y0, x.shape)))
    weight = dist**n * (1 + dist**2) ** ((M + eps) / 2)
    size = kvals * weight
    off = dist > 0.5 * h

    def smax(sel):
        return float(size[sel].max()) if sel.any() else 0.0

    near = smax(off & (dist < 1))
    far_coarse = smax((dist >= 1) & (dist <= coarse_range))
    far_full = smax((dist >= 1) & (dist <= full_range))
    shells = []
    lo = h
    while lo < full_range:
        sel = off & (dist >= lo) & (dist < 2 * lo)
        shells.append((lo, 2 * lo, smax(sel)))
        lo *= 2

    # smoothness in y of d_y^gamma K, |gamma| = M
    gammas = [a for a in _multi(n, M)]
    holder = {}
    for t in steps:
        best = 0.0
        for gamma in gammas:
            stencil = _fd_offsets(gamma, h)
            for axis in range(n):
                shift = np.zeros(n)
                shift[axis] = t * h
                dk = np.zeros(len(x), dtype=complex)
                for o, w in stencil.items():
                    yo = y0 + np.asarray(o) * h
                    dk += w * (
                        T.kernel_sample(x, np.broadcast_to(yo, x.shape))
                        - T.kernel_sample(x, np.broadcast_to(yo + shift, x.shape))
                    )
                reach = (len(stencil) > 1) * (M * h)
                sel = (dist > 2 * t * h + reach) & (dist <= full_range)
                if sel.any():
                    q = np.abs(dk[sel]) * dist[sel] ** (n + M + eps) / (t * h) ** eps
                    best = max(best, float(q.max()))
        holder[t] = best
    holder_full = max(holder.values())
    holder_coarse = max(v for t, v in holder.items() if t != min(steps)) if len(steps) > 1 else holder_full

    size_ratio = _ratio(max(near, far_full), max(near, far_coarse))
    holder_ratio = _ratio(holder_full, holder_coarse)
    l2 = operator_norm(T)
    return {
        "size_near": near,
        "size_far": far_full,
        "size_far_coarse": far_coarse,
        "size_ratio": size_ratio,
        "shells": shells,
        "holder": holder,
        "holder_ratio": holder_ratio,
        "l2_norm": l2,
        "size_pass": size_ratio <= ratio_tol,
        "holder_pass": holder_ratio <= ratio_tol,
        "passed": bool(size_ratio <= ratio_tol and holder_ratio <= ratio_tol and math.isfinite(l2)),
    }


def _multi(dim, order):
    return [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]


def amplitude_class_check(
    sigma,
    orders=(1, 1, 1),
    dim: int = 1,
    xi_max: float = 32.0,
    step: float = 0.02,
    ratio_tol: float = 1.1,
    points: int = 9,
) -> dict:
    """
    Finite-difference constants of |d_xi^a d_x^b d_y^c sigma| (1 + |xi|)^{|a|}.

    ``orders`` bounds |a|, |b|, |c|.  Samples: x, y on a small cube,
    xi along the axes and diagonals with |xi| geometric up to ``xi_max``.
    Each constant is computed twice with halved steps and once more on
    the doubled range; it passes when finite and both ratios are <= ratio_tol.
    """
    rng = np.random.default_rng(0)
    xs = rng.uniform(-1.0, 1.0, size=(points, dim))
    dirs = [np.eye(dim)[i] for i in range(dim)] + ([np.ones(dim) / math.sqrt(dim)] if dim > 1 else [])
    dirs += [-d for d in dirs]

    def freqs(top):
        radii = np.concatenate([[0.0], np.geomspace(0.25, top, 24)])
        return np.array([r * d for r in radii for d in dirs])

    rows = []
    passed = True
    for a in range(orders[0] + 1):
        for b in range(orders[1] + 1):
            for c in range(orders[2] + 1):
                for alpha in _multi(dim, a):
                    for beta in _multi(dim, b):
                        for gam in _multi(dim, c):
                            vals = {}
                            for key, top, hstep in (
                                ("coarse", xi_max, step),
                                ("fine", xi_max, step / 2),
                                ("extended", 2 * xi_max, step),
                            ):
                                vals[key] = _symbol_constant(sigma, xs, freqs(top), alpha, beta, gam, hstep)
                            r_step = _sym_ratio(vals["fine"], vals["coarse"])
                            r_range = _ratio(vals["extended"], vals["coarse"], floor=1e-9)
                            ok = all(math.isfinite(v) for v in vals.values()) and r_step <= ratio_tol and r_range <= ratio_tol
                            passed &= ok
                            rows.append(
                                {
                                    "alpha": alpha,
                                    "beta": beta,
                                    "gamma": gam,
                                    "constant": vals["fine"],
                                    "step_ratio": r_step,
                                    "range_ratio": r_range,
                                    "passed": ok,
                                }
                            )
    return {"passed": bool(passed), "rows": rows}


def _sym_ratio(a, b, floor=1e-9):
    if a <= floor and b <= floor:
        return 1.0
    if min(a, b) <= floor:
        return math.inf
    return max(a / b, b / a)


def _symbol_constant(sigma, xs, xis, alpha, beta, gam, h):
    n = xs.shape[1]
    stencil = _fd_offsets(tuple(beta) + tuple(gam) + tuple(alpha), h)
    X = np.repeat(xs, len(xis), axis=0)
    Y = np.roll(X, 1, axis=0)
    XI = np.tile(xis, (len(xs), 1))
    acc = np.zeros(len(X), dtype=complex)
    for off, w in stencil.items():
        o = np.asarray(off) * h
        acc += w * np.broadcast_to(sigma(X + o[:n], Y + o[n : 2 * n], XI + o[2 * n :]), (len(X),))
    r = np.sqrt(np.sum(XI**2, axis=1))
    return float(np.max(np.abs(acc) * (1 + r) ** sum(alpha)))


# -- profile registry -----------------------------------------------------------


def _inverse_power(grid, params):
    n = grid.dim

    def k(z):
        r = np.sqrt(np.sum(np.asarray(z) ** 2, axis=-1))
        return np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0) ** n, 0.0)

    return KernelOperator(grid, conv=k, pv=True, name="inverse_power")


def _cutoff_multiplication(grid, params):
    from .spaces import CutoffSpec, make_cutoff

    center = params.get("center", (0.0,) * grid.dim)
    return PointwiseOperator(grid, make_cutoff(CutoffSpec(tuple(center)), grid).values, "cutoff_multiplication")


def _amplitude_riesz(grid, params):
    axis = int(params.get("axis", 0))
    return AmplitudeOperator(
        grid,
        lambda x, y, xi: local_riesz_symbol(xi, axis),
        depends_x=bool(params.get("depends_x", True)),
        depends_y=False,
        force=bool(params.get("force", False)),
        name=f"amplitude_riesz_{axis}",
    )


PROFILES = {
    "identity": lambda g, p: identity(g),
    "zero": lambda g, p: zero_operator(g),
    "scaled_identity": lambda g, p: scaled_identity(g, float(p.get("scale", 2.0))),
    "local_riesz": lambda g, p: local_riesz(int(p.get("axis", 0)), g),
    "truncated_riesz": lambda g, p: truncated_riesz(int(p.get("axis", 0)), g),
    "heat": lambda g, p: MultiplierOperator(g, np.exp(-float(p.get("t", 1.0)) ** 2 * g.freq_norm**2), "heat"),
    "inverse_power": _inverse_power,
    "cutoff_multiplication": _cutoff_multiplication,
    "amplitude_riesz": _amplitude_riesz,
}


def build_operator(profile: str, grid: Grid, params: dict | None = None) -> OperatorHandle:
    """Instantiate a named operator profile."""
    if profile not in PROFILES:
        raise KeyError(f"unknown operator profile {profile!r}; known: {sorted(PROFILES)}")
    return PROFILES[profile](grid, dict(params or {}))


def export_profile(T: OperatorHandle, path) -> None:
    """
    Write a kernel profile k(z) (convolution kernels) or a multiplier
    profile m(xi) along the first axis as CSV.
    """
    g = T.grid
    half = g.samples_per_axis // 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if isinstance(T, MultiplierOperator):
            w.writerow(["xi", "re", "im"])
            idx = np.argsort(g.frequency_axis)
            line = T.symbol[(slice(None),) + (0,) * (g.dim - 1)]
            for i in idx:
                v = complex(line[i])
                w.writerow([repr(float(g.frequency_axis[i])), repr(v.real), repr(v.imag)])
        else:
            w.writerow(["z", "re", "im"])
            center = [half] * g.dim
            col = T.kernel_column(tuple(center))
            line = col[(slice(None),) + (half,) * (g.dim - 1)]
            for i in range(g.samples_per_axis):
                v = complex(line[i])
                w.writerow([repr(float(g.axis[i])), repr(v.real), repr(v.imag)])
