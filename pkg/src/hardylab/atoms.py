"""
Atoms, molecules and the constructive molecule-to-atom decomposition.

Geometry conventions
--------------------
For a ball B = B(x_B, r) on a grid, ``J = ball.max_annulus(grid)`` is the
last dyadic annulus U_J(B) that fits inside the half torus.  Everything
beyond 2^J B (the rest of the torus) is handled as one extra region, the
*tail*, indexed J + 1 and treated like an annulus of outer radius
2^{J+1} r.  With the tail included the annular split of a field is exact.

Polynomials are always centred at x_B.  Internally they are evaluated in
the scaled variable y = (x - x_B) / rho, rho = 2^j r, which keeps the Gram
matrices well conditioned at every scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BasisError, DecompositionError, GeometryError
from .grid import Ball, Grid, SampledField, distance_from, lq_norm, moment, monomial

__all__ = [
    "multi_indices",
    "AtomSpec",
    "MoleculeSpec",
    "AtomCertificate",
    "MoleculeCertificate",
    "AnnularBasis",
    "DecompositionResult",
    "generate_atom",
    "cancelled_bump",
    "validate_atom",
    "validate_molecule",
    "region_masks",
    "build_annular_basis",
    "generate_molecule",
    "synthesize_molecule",
    "decompose_molecule",
]

BASIS_CONDITION_LIMIT = 1e12
RECONSTRUCTION_TOL = 1e-8


def multi_indices(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """All alpha with |alpha| <= order, graded-lexicographic order."""
    out = []
    for deg in range(order + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=dim) if sum(a) == deg]
        out.extend(sorted(level, reverse=True))
    return tuple(out)


def _inv_q(q: float) -> float:
    return 0.0 if q == math.inf else 1.0 / q


def _check_exponents(p, q):
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not q > 1:
        raise ValueError(f"q must lie in (1, inf], got {q}")


@dataclass(frozen=True)
class AtomSpec:
    """Parameters of a (p, q, M)-atom on a ball."""

    p: float
    q: float
    M: int
    ball: Ball

    def __post_init__(self):
        _check_exponents(self.p, self.q)
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be a nonnegative integer, got {self.M}")

    @property
    def size_bound(self) -> float:
        """|B|^{1/q - 1/p}."""
        return self.ball.measure() ** (_inv_q(self.q) - 1.0 / self.p)

    def minimal_order(self) -> int:
        return math.floor(self.ball.dim * (1.0 / self.p - 1.0))

    def check_synthesis_order(self) -> None:
        """Raise unless M >= floor(n(1/p - 1))."""
        if self.M < self.minimal_order():
            raise ValueError(f"M={self.M} is below floor(n(1/p-1))={self.minimal_order()}")


@dataclass(frozen=True)
class MoleculeSpec:
    """Parameters of a (p, q, delta, s)-molecule on a ball."""

    p: float
    q: float
    delta: float
    s: float
    ball: Ball

    def __post_init__(self):
        _check_exponents(self.p, self.q)
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.s < 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")

    @property
    def floor_s(self) -> int:
        return math.floor(self.s)

    @property
    def s_star(self) -> float:
        return self.s - self.floor_s

    @property
    def alphas(self):
        return multi_indices(self.ball.dim, self.floor_s)

    def annulus_bound(self, j: int) -> float:
        """2^{-j delta} |2^j B|^{1/q - 1/p}."""
        return 2.0 ** (-j * self.delta) * self.ball.dilate(2**j).measure() ** (_inv_q(self.q) - 1.0 / self.p)

    @property
    def moment_bound(self) -> float:
        """|B|^{1 - 1/p} r^s."""
        return self.ball.measure() ** (1.0 - 1.0 / self.p) * self.ball.radius**self.s

    def check_decomposition_hypothesis(self) -> None:
        """Raise unless delta > max(0, floor(s) - n(1/p - 1))."""
        lower = max(0.0, self.floor_s - self.ball.dim * (1.0 / self.p - 1.0))
        if not self.delta > lower:
            raise ValueError(f"delta={self.delta} must exceed {lower}")


# -- regions ------------------------------------------------------------------


def region_masks(grid: Grid, ball: Ball) -> list[np.ndarray]:
    """Masks of U_0, ..., U_J and the tail beyond 2^J B (last entry)."""
    J = ball.max_annulus(grid)
    d = distance_from(grid, ball.center)
    r = ball.radius
    masks = [d < r]
    for j in range(1, J + 1):
        masks.append((d >= 2 ** (j - 1) * r) & (d < 2**j * r))
    masks.append(d >= 2**J * r)
    return masks


def _scaled_monomials(points, center, rho, alphas):
    # rows: alphas, columns: points
    y = (points - np.asarray(center)) / rho
    return np.array([np.prod(y**np.array(a), axis=1) for a in alphas]).reshape(len(alphas), len(points))


def _bump(u):
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _modulation(rng, dim, terms=4):
    c0 = rng.normal()
    amp = rng.normal(size=terms)
    freq = rng.uniform(-4.0, 4.0, size=(terms, dim))
    phase = rng.uniform(0.0, 2 * np.pi, size=terms)

    def evaluate(y):
        return c0 + np.cos(y @ freq.T + phase) @ amp

    return evaluate


# -- atoms ------------------------------------------------------------------


@dataclass(frozen=True)
class AtomCertificate:
    passed: bool
    leakage: float
    margin: float
    moment_residual: float
    l1_norm: float
    failures: tuple = ()


def generate_atom(spec: AtomSpec, grid: Grid, seed) -> SampledField:
    """
    Random smooth atom supported in the ball.

    The random parameters depend only on ``seed``, so the same seed on a
    finer grid samples the same underlying function (before the discrete
    moment projection and normalization).
    """
    ball = spec.ball
    if ball.dim != grid.dim:
        raise GeometryError("ball dimension does not match grid")
    if not grid.contains_ball(ball.center, ball.radius):
        raise GeometryError(f"{ball} does not fit in {grid}")
    rng = np.random.default_rng(seed)
    mod = _modulation(rng, grid.dim)
    d = distance_from(grid, ball.center)
    support = d < 0.9 * ball.radius
    if not support.any():
        raise BasisError(f"no grid points inside {ball}; refine the grid")
    pts = grid.points[support]
    y = (pts - np.asarray(ball.center)) / ball.radius
    env = _bump(d[support] / (0.9 * ball.radius))
    vals = env * mod(y)
    if ball.radius < 1:
        alphas = multi_indices(grid.dim, spec.M)
        V = _scaled_monomials(pts, ball.center, ball.radius, alphas)
        A = (V * env) @ V.T
        if support.sum() < 2 * len(alphas) or np.linalg.cond(A) > BASIS_CONDITION_LIMIT:
            raise BasisError(f"moment projection is rank deficient on {ball}; refine the grid")
        coef = np.linalg.solve(A, V @ vals)
        vals = vals - env * (coef @ V)
        # one refinement sweep removes the residual left by the solve
        vals = vals - env * (np.linalg.solve(A, V @ vals) @ V)
    out = np.zeros(grid.shape)
    out[support] = vals
    f = SampledField(grid, out)
    norm = lq_norm(f, spec.q)
    if norm == 0:
        raise BasisError("degenerate atom draw")
    return SampledField(grid, out * (spec.size_bound / norm))


def cancelled_bump(grid: Grid, ball: Ball, order: int) -> SampledField:
    """
    Smooth bump in ``ball`` whose grid moments vanish for |alpha| <= order.

    Built as an (order+1)-th finite difference, along the first axis, of a
    smaller bump.  The difference step is a whole number of lattice cells,
    so the moment cancellation holds exactly for the rectangle rule rather
    than only up to projection error.
    """
    m = int(order) + 1
    steps = max(1, round(ball.radius / (2 * m) / grid.spacing))
    steps += (m * steps) % 2
    inner = ball.radius - m * steps * grid.spacing / 2 - grid.spacing
    if inner <= 2 * grid.spacing:
        raise BasisError(f"{ball} is too small for an order-{order} difference on {grid}")
    core = _bump(distance_from(grid, ball.center) / inner)
    vals = np.zeros(grid.shape)
    for i in range(m + 1):
        vals += (-1) ** i * math.comb(m, i) * np.roll(core, i * steps - m * steps // 2, axis=0)
    return SampledField(grid, vals / np.max(np.abs(vals)))


def validate_atom(a: SampledField, spec: AtomSpec) -> AtomCertificate:
    """Check support, size and (for r_B < 1) moment conditions."""
    ball = spec.ball
    outside = distance_from(a.grid, ball.center) >= ball.radius
    leakage = float(np.max(np.abs(a.values[outside]))) if outside.any() else 0.0
    margin = lq_norm(a, spec.q) / spec.size_bound
    l1 = lq_norm(a, 1)
    residual = 0.0
    if ball.radius < 1:
        for alpha in multi_indices(a.grid.dim, spec.M):
            residual = max(residual, abs(moment(a, ball.center, alpha)))
    failures = []
    if leakage > 1e-12:
        failures.append("support")
    if margin > 1 + 1e-9:
        failures.append("size")
    if ball.radius < 1 and residual > 1e-10 * l1:
        failures.append("moments")
    return AtomCertificate(not failures, leakage, margin, residual, l1, tuple(failures))


# -- molecules --------------------------------------------------------------


@dataclass(frozen=True)
class MoleculeCertificate:
    passed: bool
    annulus_margins: tuple  # index j = 0..J, then the tail
    moment_margins: dict
    worst_annulus: int
    worst_margin: float
    failures: tuple = ()

    @property
    def worst(self) -> float:
        """Largest margin of any kind."""
        return max([self.worst_margin] + list(self.moment_margins.values()))


def validate_molecule(m: SampledField, spec: MoleculeSpec, tol: float = 1e-9) -> MoleculeCertificate:
    """
    Per-annulus margins ||m||_{L^q(U_j)} / (2^{-j delta}|2^j B|^{1/q-1/p}),
    including the tail region, and moment margins when r_B < 1.
    """
    masks = region_masks(m.grid, spec.ball)
    margins = []
    for j, mask in enumerate(masks):
        norm = lq_norm(m, spec.q, mask) if mask.any() else 0.0
        margins.append(norm / spec.annulus_bound(j))
    moments = {}
    if spec.ball.radius < 1:
        for alpha in spec.alphas:
            moments[alpha] = abs(moment(m, spec.ball.center, alpha)) / spec.moment_bound
    worst_j = int(np.argmax(margins))
    failures = [f"annulus {j}" for j, v in enumerate(margins) if v > 1 + tol]
    failures += [f"moment {a}" for a, v in moments.items() if v > 1 + tol]
    return MoleculeCertificate(not failures, tuple(margins), moments, worst_j, margins[worst_j], tuple(failures))


@dataclass(frozen=True, eq=False)
class AnnularBasis:
    """
    Orthonormal polynomials on one annular region under the averaged pairing.

    ``omega`` and ``nu`` have shape (len(alphas),) + grid.shape and vanish
    off ``mask``.  ``lam[a, b]`` is the coefficient of (x - x_B)^beta in
    omega_alpha; ``lam_scaled = lam * rho^|beta|`` is scale free.
    """

    j: int
    alphas: tuple
    mask: np.ndarray
    rho: float
    count: int
    measure: float
    omega: np.ndarray
    lam: np.ndarray
    lam_scaled: np.ndarray
    nu: np.ndarray
    condition: float
    omega_bound: float
    lambda_bound: float
    nu_bound: float
    monomials: np.ndarray

    def pair(self, f: np.ndarray, g: np.ndarray) -> float:
        """Average of f g over the region."""
        return float(np.mean(f[self.mask] * g[self.mask]))


def _gram_schmidt(V):
    """CGS with one re-orthogonalization pass; rows of V are vectors."""
    k, npts = V.shape
    Q = np.zeros_like(V)
    L = np.zeros((k, k))
    for i in range(k):
        w = V[i].copy()
        coef = np.zeros(k)
        coef[i] = 1.0
        n0 = math.sqrt(np.mean(w * w))
        for _ in range(2):
            c = (Q[:i] @ w) / npts
            w -= c @ Q[:i]
            coef -= c @ L[:i]
        nrm = math.sqrt(np.mean(w * w))
        if nrm <= 1e-10 * n0:
            raise BasisError("monomials are linearly dependent on this region; refine the grid")
        Q[i] = w / nrm
        L[i] = coef / nrm
    return Q, L


def _basis_on_mask(grid: Grid, ball: Ball, mask, j: int, order: int) -> AnnularBasis:
    alphas = multi_indices(grid.dim, order)
    count = int(mask.sum())
    if count < len(alphas):
        raise BasisError(f"region {j} has {count} points for {len(alphas)} polynomials; refine the grid")
    rho = 2**j * ball.radius
    pts = grid.points[mask]
    V = _scaled_monomials(pts, ball.center, rho, alphas)
    gram = (V @ V.T) / count
    cond = float(np.linalg.cond(gram))
    if not cond < BASIS_CONDITION_LIMIT:
        raise BasisError(f"Gram matrix on region {j} has condition {cond:.3g}; refine the grid")
    Q, L = _gram_schmidt(V)
    degrees = np.array([sum(a) for a in alphas])
    lam = L * rho ** (-degrees)[None, :]
    # nu_alpha = rho^{-|alpha|} sum_delta L[delta, alpha] omega_delta
    nu_pts = (L.T @ Q) * rho ** (-degrees)[:, None]
    omega = np.zeros((len(alphas),) + grid.shape)
    nu = np.zeros_like(omega)
    omega[:, mask] = Q
    nu[:, mask] = nu_pts
    omega.setflags(write=False)
    nu.setflags(write=False)
    return AnnularBasis(
        j=j,
        alphas=alphas,
        mask=mask,
        rho=rho,
        count=count,
        measure=count * grid.cell_volume,
        omega=omega,
        lam=lam,
        lam_scaled=L,
        nu=nu,
        condition=cond,
        omega_bound=float(np.max(np.abs(Q))),
        lambda_bound=float(np.max(np.abs(L))),
        nu_bound=float(np.max(np.abs(nu_pts) * rho ** degrees[:, None])),
        monomials=V,
    )


def build_annular_basis(ball: Ball, j: int, s: float, grid: Grid) -> AnnularBasis:
    """
    Orthonormal basis of polynomials of degree <= floor(s) on U_j(B).

    ``j = J + 1`` (one past ``ball.max_annulus(grid)``) selects the tail
    region beyond 2^J B.
    """
    masks = region_masks(grid, ball)
    if not 0 <= j < len(masks):
        raise GeometryError(f"annulus index {j} outside 0..{len(masks) - 1} for {ball}")
    return _basis_on_mask(grid, ball, masks[j], j, math.floor(s))


def synthesize_molecule(spec: MoleculeSpec, grid: Grid, seed) -> tuple[SampledField, dict]:
    """
    Random molecule strictly inside the constraint set, with construction data.

    Annular pieces j = 1..J get smooth bumps at 0.9 of their size budget.
    For r_B < 1 the piece on B is

        (b_0 - P_0 b_0) + sum_alpha (tau_alpha - W_alpha) nu_{0,alpha} / |B|

    where W_alpha is the alpha-moment of the outer pieces and tau_alpha the
    targeted total moment.  The three terms use 0.5, 0.2 and 0.2 of the
    size budget on B; the outer pieces are shrunk by ``kappa`` if the W
    correction would not fit.
    """
    ball = spec.ball
    rng = np.random.default_rng(seed)
    J = ball.max_annulus(grid)
    masks = region_masks(grid, ball)
    d = distance_from(grid, ball.center)
    pieces = []
    for j in range(J + 1):
        mod = _modulation(rng, grid.dim)
        rho = 2**j * ball.radius
        if j == 0:
            env = _bump(d / (0.9 * rho))
        else:
            env = _bump((d - 0.75 * rho) / (0.2 * rho))
        y = (grid.points - np.asarray(ball.center)) / rho
        pieces.append(np.where(masks[j], env * mod(y), 0.0))
    info = {"kappa": 1.0, "head_targets": {}, "head_fractions": {}}
    if ball.radius >= 1:
        out = np.zeros(grid.shape)
        for j, piece in enumerate(pieces):
            out += _scale_to(grid, piece, 0.9 * spec.annulus_bound(j), spec.q)
        return SampledField(grid, out), info

    basis = _basis_on_mask(grid, ball, masks[0], 0, spec.floor_s)
    size0 = spec.annulus_bound(0)
    outer = np.zeros(grid.shape)
    for j in range(1, J + 1):
        outer += _scale_to(grid, pieces[j], 0.9 * spec.annulus_bound(j), spec.q)
    W = np.array([moment(SampledField(grid, outer), ball.center, a) for a in basis.alphas])
    w_corr = -np.tensordot(W, basis.nu, axes=1) / basis.measure
    w_norm = lq_norm(SampledField(grid, w_corr), spec.q)
    kappa = min(1.0, 0.2 * size0 / w_norm) if w_norm > 0 else 1.0
    outer *= kappa
    w_corr *= kappa

    core = pieces[0] - _project(basis, pieces[0])
    core = _scale_to(grid, core, 0.5 * size0, spec.q)

    head = np.zeros(grid.shape)
    share = 0.2 * size0 / len(basis.alphas)
    for k, alpha in enumerate(basis.alphas):
        unit = basis.nu[k] / basis.measure
        unit_norm = lq_norm(SampledField(grid, unit), spec.q)
        cap = min(0.9 * spec.moment_bound, share / unit_norm)
        tau = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0) * cap
        head += tau * unit
        info["head_targets"][alpha] = float(tau)
        info["head_fractions"][alpha] = float(abs(tau) / spec.moment_bound)
    info["kappa"] = float(kappa)
    info["head"] = SampledField(grid, head)
    return SampledField(grid, outer + core + w_corr + head), info


def generate_molecule(spec: MoleculeSpec, grid: Grid, seed) -> SampledField:
    """Random molecule whose validation margins are all at most 0.9."""
    return synthesize_molecule(spec, grid, seed)[0]


def _scale_to(grid, values, target, q):
    norm = lq_norm(SampledField(grid, values), q)
    return values * (target / norm) if norm > 0 else values


def _project(basis: AnnularBasis, values: np.ndarray) -> np.ndarray:
    """P f = sum_alpha <f, x^alpha> nu_alpha."""
    coeffs = (basis.monomials @ values[basis.mask]) / basis.count
    degrees = np.array([sum(a) for a in basis.alphas])
    # <f, x^a> = rho^|a| <f, y^a>
    return np.tensordot(coeffs * basis.rho**degrees, basis.nu, axes=1)


# -- decomposition ----------------------------------------------------------


@dataclass(eq=False)
class DecompositionResult:
    """
    Pieces of the molecule decomposition.

    ``a_list[j]`` is m_j - P_j (j = 0..J and the tail), ``a_cross[(j, alpha)]``
    the summation-by-parts atoms and ``a_head[alpha]`` the head terms.
    ``N`` has one row per region plus a final zero row.
    """

    spec: MoleculeSpec
    a_list: list
    a_cross: dict
    a_head: dict
    N: np.ndarray
    alphas: tuple
    bases: list
    residual: float
    certificates: dict = field(default_factory=dict)

    def reconstruct(self) -> SampledField:
        grid = self.a_list[0].grid
        total = np.zeros(grid.shape, dtype=np.result_type(*[a.values for a in self.a_list]))
        for piece in self.pieces():
            total = total + piece.values
        return SampledField(grid, total)

    def pieces(self):
        yield from self.a_list
        yield from self.a_cross.values()
        yield from self.a_head.values()

    def report(self) -> dict:
        """Plain-data summary (JSON serializable)."""
        c = self.certificates
        return {
            "residual": self.residual,
            "C1": c.get("C1"),
            "C2": c.get("C2"),
            "C3": c.get("C3"),
            "CN": c.get("CN"),
            "max_moment_ratio": c.get("max_moment_ratio"),
            "condition_numbers": [b.condition for b in self.bases],
            "annulus_C1": c.get("annulus_C1"),
            "rescale": c.get("rescale"),
            "branch": c.get("branch"),
        }


def _moment_ratio(f: np.ndarray, grid, ball, alphas, rho) -> float:
    field_ = SampledField(grid, f)
    l1 = lq_norm(field_, 1)
    if l1 == 0:
        return 0.0
    return max(abs(moment(field_, ball.center, a)) / (l1 * rho ** sum(a)) for a in alphas)


def decompose_molecule(m: SampledField, spec: MoleculeSpec) -> DecompositionResult:
    """
    Split a molecule into atoms: a_j = m_j - P_j, cross terms from
    summation by parts, and head terms carrying the total moments.
    """
    grid = m.grid
    ball = spec.ball
    masks = region_masks(grid, ball)
    regions = len(masks)
    q = spec.q
    h_n = grid.cell_volume

    if ball.radius >= 1:
        a_list = [m.restrict(mask) for mask in masks]
        margins = [lq_norm(a, q, masks[j]) / spec.annulus_bound(j) for j, a in enumerate(a_list)]
        res = _residual(m, a_list)
        result = DecompositionResult(spec, a_list, {}, {}, np.zeros((0, 0)), (), [], res)
        result.certificates = {
            "branch": "large",
            "C1": max(margins),
            "C2": 0.0,
            "C3": 0.0,
            "CN": 0.0,
            "annulus_C1": margins,
            "rescale": [2.0 ** (j * spec.delta) for j in range(regions)],
            "max_moment_ratio": 0.0,
        }
        _check_residual(result, m)
        return result

    bases = []
    for j, mask in enumerate(masks):
        bases.append(_basis_on_mask(grid, ball, mask, j, spec.floor_s))
    alphas = bases[0].alphas
    vals = m.values
    centred = [monomial(grid, ball.center, a) for a in alphas]

    a_list, mj_moments = [], np.zeros((regions, len(alphas)), dtype=np.result_type(vals, float))
    for j, (mask, basis) in enumerate(zip(masks, bases)):
        mj = np.where(mask, vals, 0)
        a_list.append(SampledField(grid, mj - _project(basis, mj)))
        # \int m_j x^alpha = |U_j| <m_j, x^alpha>_j
        mj_moments[j] = [h_n * np.sum(mj * c) for c in centred]

    N = np.zeros((regions + 1, len(alphas)), dtype=mj_moments.dtype)
    for j in range(regions - 1, -1, -1):
        N[j] = N[j + 1] + mj_moments[j]

    a_cross = {}
    for j in range(regions - 1):
        nxt, cur = bases[j + 1], bases[j]
        for k, alpha in enumerate(alphas):
            a_cross[(j, alpha)] = SampledField(grid, N[j + 1, k] * (nxt.nu[k] / nxt.measure - cur.nu[k] / cur.measure))
    a_head = {alpha: SampledField(grid, bases[0].nu[k] * N[0, k] / bases[0].measure) for k, alpha in enumerate(alphas)}

    res = _residual(m, list(a_list) + list(a_cross.values()) + list(a_head.values()))
    result = DecompositionResult(spec, a_list, a_cross, a_head, N, alphas, bases, res)
    result.certificates = _certificates(result, grid, ball, spec, masks)
    _check_residual(result, m)
    return result


def _residual(m, pieces) -> float:
    total = np.zeros(m.grid.shape, dtype=np.result_type(m.values, float))
    for p in pieces:
        total = total + p.values
    scale = np.max(np.abs(m.values))
    diff = float(np.max(np.abs(total - m.values)))
    return diff / scale if scale > 0 else diff


def _check_residual(result, m):
    if not result.residual <= RECONSTRUCTION_TOL:
        recon = result.reconstruct()
        raise DecompositionError(
            f"reconstruction residual {result.residual:.3e} exceeds {RECONSTRUCTION_TOL:g}",
            residual=SampledField(m.grid, m.values - recon.values),
        )


def _certificates(result, grid, ball, spec, masks):
    q = spec.q
    regions = len(masks)
    c1 = []
    for j, a in enumerate(result.a_list):
        c1.append(lq_norm(a, q) / spec.annulus_bound(j))
    c2 = [lq_norm(a, q) / spec.annulus_bound(j) for (j, _), a in result.a_cross.items()]
    c3 = []
    r = ball.radius
    for alpha, a in result.a_head.items():
        bound = ball.measure() ** (_inv_q(q) - 1 / spec.p) * r ** (spec.s - sum(alpha))
        c3.append(lq_norm(a, q) / bound)
    cn = []
    for j in range(regions):
        rho = 2**j * r
        big = ball.dilate(2**j).measure() ** (1 - 1 / spec.p) * 2.0 ** (-j * spec.delta)
        for k, alpha in enumerate(result.alphas):
            cn.append(abs(result.N[j, k]) / (big * rho ** sum(alpha)))
    ratios = []
    for j, a in enumerate(result.a_list):
        ratios.append(_moment_ratio(a.values, grid, ball, result.alphas, 2**j * r))
    for (j, _), a in result.a_cross.items():
        ratios.append(_moment_ratio(a.values, grid, ball, result.alphas, 2 ** (j + 1) * r))
    return {
        "branch": "small",
        "C1": max(c1),
        "C2": max(c2) if c2 else 0.0,
        "C3": max(c3) if c3 else 0.0,
        "CN": max(cn) if cn else 0.0,
        "annulus_C1": c1,
        "rescale": None,
        "max_moment_ratio": max(ratios) if ratios else 0.0,
    }
