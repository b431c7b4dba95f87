import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab import atoms, errors
from hardylab import grid as gc

G1 = gc.make_grid(1, 8.0, 1024)
G2 = gc.make_grid(2, 4.0, 128)


def mspec(p, q, delta, s, ball):
    return atoms.MoleculeSpec(p, q, delta, s, ball)


class TestMultiIndices:
    def test_grlex(self):
        assert atoms.multi_indices(2, 2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

    @pytest.mark.parametrize("dim,order", [(1, 3), (2, 2), (3, 2)])
    def test_count(self, dim, order):
        assert len(atoms.multi_indices(dim, order)) == math.comb(order + dim, dim)


class TestSpecs:
    def test_synthesis_order(self):
        spec = atoms.AtomSpec(0.4, 2, 0, gc.Ball((0.0,), 0.5))
        with pytest.raises(ValueError):
            spec.check_synthesis_order()
        atoms.AtomSpec(0.4, 2, 1, gc.Ball((0.0,), 0.5)).check_synthesis_order()

    def test_decomposition_hypothesis(self):
        ball = gc.Ball((0.0,), 0.5)
        mspec(0.8, 2, 1.0, 1.2, ball).check_decomposition_hypothesis()
        with pytest.raises(ValueError):
            mspec(0.9, 2, 0.8, 1.2, ball).check_decomposition_hypothesis()

    def test_floor_and_star(self):
        spec = mspec(0.8, 2, 1.0, 2.3, gc.Ball((0.0,), 0.5))
        assert spec.floor_s == 2 and spec.s_star == pytest.approx(0.3)

    @pytest.mark.parametrize("p,q", [(0.0, 2), (1.2, 2), (0.5, 1.0)])
    def test_bad_exponents(self, p, q):
        with pytest.raises(ValueError):
            atoms.AtomSpec(p, q, 0, gc.Ball((0.0,), 1.0))


class TestAtoms:
    def test_large_ball_normalization(self):
        spec = atoms.AtomSpec(0.8, 2, 1, gc.Ball((0.0,), 2.0))
        a = atoms.generate_atom(spec, G1, 3)
        assert gc.lq_norm(a, 2) == pytest.approx(spec.size_bound, rel=1e-12)

    def test_small_ball_moments(self):
        spec = atoms.AtomSpec(0.8, 2, 1, gc.Ball((0.3,), 0.5))
        a = atoms.generate_atom(spec, G1, 4)
        l1 = gc.lq_norm(a, 1)
        for alpha in [(0,), (1,)]:
            assert abs(gc.moment(a, (0.3,), alpha)) <= 1e-12 * l1

    def test_seeds_decorrelate(self):
        spec = atoms.AtomSpec(0.8, 2, 1, gc.Ball((0.0,), 0.5))
        a, b = (atoms.generate_atom(spec, G1, s).values for s in (0, 1))
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.99

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([2.0, 1.0, 0.5, 0.25, 0.125]), st.sampled_from([2.0, math.inf]))
    def test_round_trip(self, seed, r, q):
        spec = atoms.AtomSpec(0.8, q, 1, gc.Ball((0.0,), r))
        assert atoms.validate_atom(atoms.generate_atom(spec, G1, seed), spec).passed

    def test_round_trip_2d(self):
        spec = atoms.AtomSpec(0.9, 2, 1, gc.Ball((0.5, -0.5), 0.5))
        assert atoms.validate_atom(atoms.generate_atom(spec, G2, 0), spec).passed

    def test_oversized_constant(self):
        ball = gc.Ball((0.0,), 1.0)
        spec = atoms.AtomSpec(0.8, math.inf, 0, ball)
        a = G1.field(lambda x: 2 * ball.measure() ** (-1 / 0.8) * (np.abs(x) < 1))
        cert = atoms.validate_atom(a, spec)
        assert not cert.passed and cert.margin == pytest.approx(2.0)

    def test_indicator_fails_moments(self):
        ball = gc.Ball((0.0,), 0.5)
        spec = atoms.AtomSpec(0.8, 2, 0, ball)
        a = G1.field(lambda x: ball.measure() ** (-1 / 0.8) * (np.abs(x) < 0.5))
        cert = atoms.validate_atom(a, spec)
        assert cert.failures == ("moments",)

    def test_too_coarse(self):
        g = gc.make_grid(1, 8.0, 64)
        with pytest.raises(errors.BasisError):
            atoms.generate_atom(atoms.AtomSpec(0.5, 2, 3, gc.Ball((0.0,), 0.25)), g, 0)


class TestCancelledBump:
    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_exact_moments(self, order):
        ball = gc.Ball((0.5,), 0.25)
        b = atoms.cancelled_bump(G1, ball, order)
        l1 = gc.lq_norm(b, 1)
        for a in range(order + 1):
            assert abs(gc.moment(b, ball.center, (a,))) <= 1e-13 * l1
        assert abs(gc.moment(b, ball.center, (order + 1,))) > 1e-6 * l1 * ball.radius ** (order + 1)
        assert np.all(b.values[np.abs(G1.axis - 0.5) >= 0.25] == 0)

    def test_2d(self):
        ball = gc.Ball((0.0, 0.0), 0.5)
        b = atoms.cancelled_bump(G2, ball, 1)
        for alpha in atoms.multi_indices(2, 1):
            assert abs(gc.moment(b, ball.center, alpha)) <= 1e-13 * gc.lq_norm(b, 1)

    def test_too_small(self):
        with pytest.raises(errors.BasisError):
            atoms.cancelled_bump(gc.make_grid(1, 8.0, 64), gc.Ball((0.0,), 0.25), 2)


class TestValidateMolecule:
    def test_large_atom_is_molecule(self):
        ball = gc.Ball((0.0,), 1.0)
        a = atoms.generate_atom(atoms.AtomSpec(0.8, 2, 0, ball), G1, 1)
        for delta, s in [(0.5, 0.3), (3.0, 2.5)]:
            assert atoms.validate_molecule(a, mspec(0.8, 2, delta, s, ball)).passed

    def test_small_atom_is_molecule(self):
        ball = gc.Ball((0.0,), 0.25)
        a = atoms.generate_atom(atoms.AtomSpec(0.8, 2, 2, ball), G1, 2)
        cert = atoms.validate_molecule(a, mspec(0.8, 2, 1.5, 2.7, ball))
        assert cert.passed
        assert max(cert.moment_margins.values()) <= 1e-9

    def test_constructed_annulus_violation(self):
        ball = gc.Ball((0.0,), 0.0625)
        spec = mspec(0.8, 2, 1.0, 0.5, ball)
        mask = gc.annulus_mask(G1, ball, 5)
        bump = np.where(mask, 1.0, 0.0)
        bump *= 2 * spec.annulus_bound(5) / gc.lq_norm(gc.SampledField(G1, bump), 2)
        cert = atoms.validate_molecule(gc.SampledField(G1, bump), spec)
        assert not cert.passed
        assert cert.worst_annulus == 5
        assert cert.worst_margin == pytest.approx(2.0)


@pytest.mark.parametrize(
    "grid,p,delta,s,ball",
    [
        (G1, 0.8, 1.0, 1.2, gc.Ball((0.0,), 0.5)),
        (G1, 0.6, 1.5, 2.3, gc.Ball((0.25,), 0.25)),
        (G1, 0.8, 1.0, 1.2, gc.Ball((0.0,), 2.0)),
        (G2, 0.9, 0.7, 1.4, gc.Ball((0.0, 0.0), 0.25)),
    ],
)
class TestGenerateMolecule:
    def test_interior(self, grid, p, delta, s, ball):
        spec = mspec(p, 2, delta, s, ball)
        for seed in range(5):
            cert = atoms.validate_molecule(atoms.generate_molecule(spec, grid, seed), spec)
            assert cert.passed and cert.worst <= 0.9 + 1e-9

    def test_head_moment_target(self, grid, p, delta, s, ball):
        spec = mspec(p, 2, delta, s, ball)
        field, info = atoms.synthesize_molecule(spec, grid, 7)
        if ball.radius >= 1:
            assert info["head_targets"] == {}
            return
        zero = (0,) * grid.dim
        tau = info["head_targets"][zero]
        assert gc.moment(info["head"], ball.center, zero) == pytest.approx(tau, rel=1e-10)
        assert gc.moment(field, ball.center, zero) == pytest.approx(tau, rel=1e-10, abs=1e-12 * spec.moment_bound)
        assert info["head_fractions"][zero] == pytest.approx(abs(tau) / spec.moment_bound)


def test_tighter_delta_fails():
    ball = gc.Ball((0.0,), 0.0625)
    spec = mspec(0.8, 2, 1.0, 1.2, ball)
    m = atoms.generate_molecule(spec, G1, 0)
    cert = atoms.validate_molecule(m, mspec(0.8, 2, 2.0, 1.2, ball))
    assert not cert.passed
    assert cert.worst_annulus >= 3


class TestAnnularBasis:
    def test_constant_basis(self):
        ball = gc.Ball((0.0,), 0.5)
        for j in (0, 2):
            b = atoms.build_annular_basis(ball, j, 0.7, G1)
            assert np.allclose(b.omega[0][b.mask], 1.0)
            assert np.allclose(b.nu[0][b.mask], 1.0)

    def test_two_by_two_oracle(self):
        ball = gc.Ball((0.0,), 1.0)
        b = atoms.build_annular_basis(ball, 0, 1.0, G1)
        x = G1.axis[b.mask]
        m1, m2 = x.mean(), (x * x).mean()
        sigma = math.sqrt(m2 - m1 * m1)
        assert np.allclose(b.lam, [[1.0, 0.0], [-m1 / sigma, 1 / sigma]], atol=1e-10)
        # dual basis solves the 2x2 Gram system
        gram = np.array([[1.0, m1], [m1, m2]])
        coef = np.linalg.inv(gram)
        nu_ref = coef[:, :1] + coef[:, 1:] * x[None, :]
        assert np.allclose(b.nu[:, b.mask], nu_ref, atol=1e-10)

    @pytest.mark.parametrize("grid,s,center", [(G1, 2.5, (0.1,)), (G2, 2.2, (0.0, 0.25))])
    def test_orthonormal_and_dual(self, grid, s, center):
        ball = gc.Ball(center, 0.25)
        J = ball.max_annulus(grid)
        for j in range(J + 2):
            b = atoms.build_annular_basis(ball, j, s, grid)
            k = len(b.alphas)
            gram = np.array([[b.pair(b.omega[u], b.omega[v]) for v in range(k)] for u in range(k)])
            assert np.max(np.abs(gram - np.eye(k))) <= 1e-10
            mono = [gc.monomial(grid, center, a) for a in b.alphas]
            dual = np.array([[b.pair(b.nu[u], mono[v]) for v in range(k)] for u in range(k)])
            assert np.max(np.abs(dual - np.eye(k))) <= 1e-10
            # expansion of omega in centred monomials
            recon = np.tensordot(b.lam, np.array(mono), axes=1)
            assert np.allclose(recon[:, b.mask], b.omega[:, b.mask], atol=1e-10)
            assert b.condition < atoms.BASIS_CONDITION_LIMIT

    def test_scale_free_bounds(self):
        bounds = []
        for r in (0.5, 0.25, 0.125):
            b = atoms.build_annular_basis(gc.Ball((0.0,), r), 1, 2.0, gc.make_grid(1, 8.0, 4096))
            bounds.append((b.omega_bound, b.lambda_bound, b.nu_bound))
        bounds = np.array(bounds)
        assert np.all(bounds.max(axis=0) / bounds.min(axis=0) < 1.05)

    def test_ill_conditioned(self):
        g = gc.make_grid(1, 8.0, 64)
        with pytest.raises(errors.BasisError):
            atoms.build_annular_basis(gc.Ball((0.0,), 0.25), 0, 3.5, g)

    def test_index_range(self):
        ball = gc.Ball((0.0,), 0.5)
        with pytest.raises(errors.GeometryError):
            atoms.build_annular_basis(ball, ball.max_annulus(G1) + 2, 1.0, G1)


CONFIGS = [
    (G1, 0.8, 1.0, 1.2, gc.Ball((0.0,), 0.5)),
    (G1, 0.6, 1.5, 2.3, gc.Ball((0.0,), 0.125)),
    (G2, 0.9, 0.7, 1.4, gc.Ball((0.0, 0.0), 0.5)),
]


@pytest.mark.parametrize("grid,p,delta,s,ball", CONFIGS)
class TestDecomposition:
    def test_pieces(self, grid, p, delta, s, ball):
        spec = mspec(p, 2, delta, s, ball)
        m = atoms.generate_molecule(spec, grid, 11)
        res = atoms.decompose_molecule(m, spec)
        assert res.residual <= 1e-8
        masks = atoms.region_masks(grid, ball)
        mono = {a: gc.monomial(grid, ball.center, a) for a in res.alphas}
        d = gc.distance_from(grid, ball.center)
        J = len(masks) - 2
        for j, a in enumerate(res.a_list):
            assert np.all(a.values[~masks[j]] == 0)
            rho = 2**j * ball.radius
            for alpha in res.alphas:
                scale = rho ** sum(alpha)
                assert abs(gc.moment(a, ball.center, alpha)) <= 1e-10 * gc.lq_norm(a, 1) * scale
                # projection is orthogonal to V_j
                assert abs(res.bases[j].pair(a.values, mono[alpha])) <= 1e-10 * a.sup() * scale
        for (j, _), a in res.a_cross.items():
            assert np.all(a.values[~(masks[j] | masks[j + 1])] == 0)
            if j + 1 <= J:
                assert np.all(a.values[d >= 2 ** (j + 1) * ball.radius] == 0)
        for alpha, a in res.a_head.items():
            assert np.all(a.values[d >= ball.radius] == 0)
            for beta in res.alphas:
                mom = gc.moment(a, ball.center, beta)
                if beta == alpha:
                    assert abs(mom) <= spec.moment_bound * (1 + 1e-9)
                else:
                    assert abs(mom) <= 1e-10 * spec.moment_bound
        assert res.certificates["max_moment_ratio"] <= 1e-10

    def test_n_telescoping(self, grid, p, delta, s, ball):
        spec = mspec(p, 2, delta, s, ball)
        m = atoms.generate_molecule(spec, grid, 12)
        res = atoms.decompose_molecule(m, spec)
        masks = atoms.region_masks(grid, ball)
        scale = np.max(np.abs(res.N)) + 1e-300
        for j, mask in enumerate(masks):
            basis = res.bases[j]
            mj = np.where(mask, m.values, 0)
            for k, alpha in enumerate(res.alphas):
                lhs = basis.measure * basis.pair(mj, gc.monomial(grid, ball.center, alpha))
                assert abs(lhs - (res.N[j, k] - res.N[j + 1, k])) <= 1e-10 * scale

    def test_linearity(self, grid, p, delta, s, ball):
        spec = mspec(p, 2, delta, s, ball)
        m1, m2 = (atoms.generate_molecule(spec, grid, seed) for seed in (1, 2))
        r1, r2 = atoms.decompose_molecule(m1, spec), atoms.decompose_molecule(m2, spec)
        r12 = atoms.decompose_molecule(0.5 * (m1 + m2), spec)
        for a, b, c in zip(r12.pieces(), r1.pieces(), r2.pieces()):
            ref = 0.5 * (b.values + c.values)
            assert np.max(np.abs(a.values - ref)) <= 1e-10 * (np.max(np.abs(ref)) + np.max(np.abs(m1.values)))

    def test_constants_finite(self, grid, p, delta, s, ball):
        spec = mspec(p, 2, delta, s, ball)
        rep = atoms.decompose_molecule(atoms.generate_molecule(spec, grid, 3), spec).report()
        for key in ("C1", "C2", "C3", "CN"):
            assert np.isfinite(rep[key])
        assert rep["branch"] == "small"


def test_atom_is_fixed_point():
    ball = gc.Ball((0.0,), 0.5)
    spec = mspec(0.8, 2, 1.0, 1.2, ball)
    a = atoms.generate_atom(atoms.AtomSpec(0.8, 2, 1, ball), G1, 5)
    res = atoms.decompose_molecule(a, spec)
    scale = a.sup()
    assert np.max(np.abs(res.a_list[0].values - a.values)) <= 1e-10 * scale
    assert np.max(np.abs(res.N)) <= 1e-12 * gc.lq_norm(a, 1)
    for piece in list(res.a_head.values()) + list(res.a_cross.values()):
        assert piece.sup() <= 1e-10 * scale
    assert res.residual <= 1e-14


def test_large_ball_branch():
    ball = gc.Ball((0.0,), 1.0)
    spec = mspec(0.8, 2, 1.0, 1.2, ball)
    m = atoms.generate_molecule(spec, G1, 0)
    res = atoms.decompose_molecule(m, spec)
    assert res.certificates["branch"] == "large"
    assert res.a_cross == {} and res.a_head == {}
    assert res.residual == 0.0
    assert res.certificates["rescale"][:3] == [1.0, 2.0, 4.0]
    assert res.certificates["C1"] <= 0.9 + 1e-9


def test_decomposition_c_stable_across_seeds():
    ball = gc.Ball((0.0,), 0.5)
    spec = mspec(0.8, 2, 1.0, 1.2, ball)
    c1 = [atoms.decompose_molecule(atoms.generate_molecule(spec, G1, s), spec).certificates["C1"] for s in range(6)]
    assert max(c1) / min(c1) < 3
