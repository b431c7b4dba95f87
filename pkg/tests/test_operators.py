import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab import errors, heat
from hardylab import grid as gc
from hardylab import operators as ops


def rand(grid, seed, cplx=False):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.shape)
    if cplx:
        v = v + 1j * rng.standard_normal(grid.shape)
    return gc.SampledField(grid, v)


G = gc.make_grid(1, 8.0, 256)
G128 = gc.make_grid(1, 4.0, 128)


def random_kernel_operator(grid, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=2)

    def k(x, y):
        x, y = x[..., 0], y[..., 0]
        return np.exp(-((x - a * y) ** 2)) * (1 + 1j * np.sin(b * x + y))

    return ops.KernelOperator(grid, kernel=k)


def operator_zoo(grid):
    return [
        ops.identity(grid),
        ops.local_riesz(0, grid),
        ops.truncated_riesz(0, grid),
        random_kernel_operator(grid, 3),
        ops.build_operator("cutoff_multiplication", grid),
        ops.build_operator("heat", grid, {"t": 0.4}),
    ]


class TestApply:
    def test_unit_multiplier(self):
        f = rand(G, 0)
        assert np.max(np.abs(ops.identity(G).apply(f).values - f.values)) <= 1e-12

    def test_unit_amplitude(self):
        g = gc.make_grid(1, 4.0, 32)
        f = rand(g, 1)
        T = ops.amplitude_operator(lambda x, y, xi: np.ones(np.broadcast_shapes(x.shape, y.shape, xi.shape)[:-1]), g)
        assert np.max(np.abs(T.apply(f).values - f.values)) <= 1e-10

    def test_local_riesz_eigenmode(self):
        k = 60
        xi0 = k * math.pi / G.half_width
        f = G.field(lambda x: np.exp(1j * xi0 * x))
        got = ops.local_riesz(0, G).apply(f).values
        factor = ops.local_riesz_symbol(np.array([[xi0]]), 0)[0]
        assert factor == pytest.approx(1j)
        assert np.max(np.abs(got - factor * f.values)) <= 1e-12

    def test_grid_mismatch(self):
        with pytest.raises(errors.GridMismatchError):
            ops.identity(G).apply(rand(G128, 0))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 999), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        f, h = rand(G, seed), rand(G, seed + 1)
        for T in operator_zoo(G):
            lhs = T.apply(a * f + b * h).values
            rhs = a * T.apply(f).values + b * T.apply(h).values
            assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (np.max(np.abs(rhs)) + abs(a) + abs(b) + 1)


class TestAdjoint:
    def test_truncated_riesz_antisymmetric(self):
        T = ops.truncated_riesz(0, G)
        f, h = rand(G, 2), rand(G, 3)
        assert abs(gc.inner(T.apply(f), h) + gc.inner(f, T.apply(h))) <= 1e-10 * gc.lq_norm(f, 2) * gc.lq_norm(h, 2)
        assert np.allclose(T.adjoint().apply(f).values, -T.apply(f).values, atol=1e-12)

    def test_self_adjoint_multiplier(self):
        T = ops.MultiplierOperator.from_function(G, lambda xi: 1 / (1 + np.sum(xi**2, axis=-1)))
        f = rand(G, 4)
        assert np.allclose(T.adjoint().apply(f).values, T.apply(f).values, atol=1e-14)

    def test_random_kernel_pairing(self):
        T = random_kernel_operator(G128, 7)
        f, h = rand(G128, 5, True), rand(G128, 6, True)
        lhs = gc.inner(T.apply(f), h)
        rhs = gc.inner(f, T.adjoint().apply(h))
        assert abs(lhs - rhs) <= 1e-10 * gc.lq_norm(f, 2) * gc.lq_norm(h, 2)

    def test_pairing_twenty_draws(self):
        for T in operator_zoo(G):
            Ts = T.adjoint()
            worst = 0.0
            for k in range(20):
                f, h = rand(G, 100 + k, True), rand(G, 200 + k, True)
                gap = abs(gc.inner(T.apply(f), h) - gc.inner(f, Ts.apply(h)))
                worst = max(worst, gap / (gc.lq_norm(f, 2) * gc.lq_norm(h, 2)))
            assert worst <= 1e-9, T

    def test_double_adjoint(self):
        f = rand(G, 8, True)
        for T in operator_zoo(G):
            assert np.max(np.abs(T.adjoint().adjoint().apply(f).values - T.apply(f).values)) <= 1e-10 * f.sup()

    def test_amplitude_pairing(self):
        g = gc.make_grid(1, 4.0, 32)
        sigma = lambda x, y, xi: np.cos(x[..., 0]) * np.exp(-0.1 * y[..., 0] ** 2) / (1 + xi[..., 0] ** 2)
        T = ops.amplitude_operator(sigma, g)
        f, h = rand(g, 9, True), rand(g, 10, True)
        gap = abs(gc.inner(T.apply(f), h) - gc.inner(f, T.adjoint().apply(h)))
        assert gap <= 1e-10 * gc.lq_norm(f, 2) * gc.lq_norm(h, 2)


class TestLocalRiesz:
    @pytest.mark.parametrize("dim,n", [(1, 256), (2, 64)])
    def test_symbol(self, dim, n):
        g = gc.make_grid(dim, 4.0, n)
        for axis in range(dim):
            R = ops.local_riesz(axis, g)
            m = R.symbol
            r = g.freq_norm
            assert m.flat[0] == 0
            assert np.max(np.abs(m)) <= 1.0
            far = r >= 2
            assert np.allclose(m[far], 1j * g.frequencies[..., axis][far] / r[far], atol=1e-15)

    def test_power_iteration_norm(self):
        assert ops.operator_norm(ops.local_riesz(0, G)) <= 1 + 1e-6

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            ops.local_riesz(1, G)


class TestTruncatedRiesz:
    def test_kernel_shape(self):
        k = ops.riesz_kernel(0)
        z = np.linspace(-4, 4, 801)[:, None]
        vals = k(z)
        assert np.all(vals[np.abs(z[:, 0]) >= 2] == 0)
        assert np.allclose(k(-z), -vals)
        assert k(np.zeros((1, 1)))[0] == 0

    def test_kills_constants(self):
        for g in (G, gc.make_grid(2, 2.0, 64)):
            for axis in range(g.dim):
                assert ops.truncated_riesz(axis, g).apply(g.constant(1.0)).sup() <= 1e-10

    def test_matches_direct_sum(self):
        g = G128
        T = ops.truncated_riesz(0, g)
        f = rand(g, 11)
        x = g.axis
        w = 2 * g.half_width
        z = (x[:, None] - x[None, :] + g.half_width) % w - g.half_width
        K = ops.riesz_kernel(0)(z[..., None])
        np.fill_diagonal(K, 0)
        ref = K @ f.values * g.spacing
        assert np.max(np.abs(T.apply(f).values - ref)) <= 1e-10 * np.max(np.abs(ref))

    def test_column_reconstruction(self):
        T = ops.truncated_riesz(0, G128)
        col = T.kernel_column((40,))
        y = G128.axis[40]
        ref = T.kernel_sample(G128.points, np.full_like(G128.points, y))
        assert np.allclose(col, ref, atol=1e-10)

    def test_resolution_guard(self):
        with pytest.raises(errors.GeometryError):
            ops.truncated_riesz(0, gc.make_grid(1, 8.0, 128))


class TestAmplitude:
    def test_multiplication_operator(self):
        g = gc.make_grid(1, 4.0, 64)
        psi = lambda x: np.exp(-x**2) * np.cos(3 * x)
        T = ops.amplitude_operator(lambda x, y, xi: psi(x[..., 0]) + 0 * xi[..., 0], g, depends_y=False)
        f = rand(g, 12)
        assert np.max(np.abs(T.apply(f).values - psi(g.axis) * f.values)) <= 1e-10

    def test_heat_symbol(self):
        T = ops.amplitude_operator(lambda x, y, xi: np.exp(-np.sum(xi**2, axis=-1)), G, depends_x=False, depends_y=False)
        f = rand(G, 13)
        assert np.max(np.abs(T.apply(f).values - heat.heat_apply(f, 1.0).values)) <= 1e-10

    @pytest.mark.parametrize("flags", [(True, False), (False, True), (True, True)])
    def test_paths_agree_on_local_riesz(self, flags):
        g = G128 if flags != (True, True) else gc.make_grid(1, 8.0, 64)
        sigma = lambda x, y, xi: ops.local_riesz_symbol(xi, 0) + 0 * x[..., 0] + 0 * y[..., 0]
        T = ops.amplitude_operator(sigma, g, depends_x=flags[0], depends_y=flags[1])
        f = rand(g, 14)
        ref = ops.local_riesz(0, g).apply(f).values
        assert np.max(np.abs(T.apply(f).values - ref)) <= 1e-8

    def test_cost_guard(self):
        g = gc.make_grid(1, 8.0, 512)
        T = ops.amplitude_operator(lambda x, y, xi: np.ones(xi.shape[:-1]), g)
        with pytest.raises(errors.CostGuardError):
            T.apply(rand(g, 0))
        g2 = gc.make_grid(2, 4.0, 128)
        with pytest.raises(errors.CostGuardError):
            ops.amplitude_operator(lambda x, y, xi: 1.0, g2, depends_y=False).apply(rand(g2, 0))


class TestAmplitudeClass:
    def test_constant_symbol(self):
        res = ops.amplitude_class_check(lambda x, y, xi: np.ones(xi.shape[:-1]))
        assert res["passed"]
        higher = [r["constant"] for r in res["rows"] if sum(map(sum, (r["alpha"], r["beta"], r["gamma"]))) > 0]
        assert max(higher) <= 1e-8

    def test_local_riesz_symbol(self):
        assert ops.amplitude_class_check(lambda x, y, xi: ops.local_riesz_symbol(xi, 0), orders=(2, 1, 1))["passed"]

    def test_local_riesz_symbol_2d(self):
        res = ops.amplitude_class_check(lambda x, y, xi: ops.local_riesz_symbol(xi, 1), orders=(1, 0, 0), dim=2)
        assert res["passed"]

    def test_growing_symbol_fails(self):
        res = ops.amplitude_class_check(lambda x, y, xi: np.sqrt(np.sum(xi**2, axis=-1)))
        assert not res["passed"]
        zero = [r for r in res["rows"] if r["alpha"] == (0,) and r["beta"] == (0,) and r["gamma"] == (0,)][0]
        assert not zero["passed"]


class TestCzoi:
    def test_truncated_riesz(self):
        res = ops.czoi_check(ops.truncated_riesz(0, gc.make_grid(1, 8.0, 1024)), ops.CzoiParams(0, 1.0))
        assert res["passed"]
        assert np.isfinite(res["size_near"]) and res["size_near"] > 0
        assert all(v == 0 for lo, hi, v in res["shells"] if lo >= 2)
        assert np.isfinite(res["l2_norm"])

    def test_zero_operator(self):
        res = ops.czoi_check(ops.zero_operator(G), ops.CzoiParams(1, 0.5))
        assert res["passed"]
        assert res["size_near"] == res["size_far"] == res["l2_norm"] == 0
        assert all(v == 0 for v in res["holder"].values())

    def test_uncut_kernel_fails_size(self):
        T = ops.build_operator("inverse_power", gc.make_grid(1, 8.0, 1024))
        res = ops.czoi_check(T, ops.CzoiParams(1, 1.0))
        assert not res["size_pass"]
        assert res["size_ratio"] > 1.1

    @pytest.mark.parametrize("M,eps", [(-1, 0.5), (0, 0.0), (0, 1.5), (0.5, 1.0)])
    def test_params(self, M, eps):
        with pytest.raises(ValueError):
            ops.CzoiParams(M, eps)


class TestRegistry:
    def test_all_profiles_build(self):
        g = gc.make_grid(1, 8.0, 256)
        f = rand(g, 0)
        for name in ops.PROFILES:
            T = ops.build_operator(name, g)
            assert T.apply(f).values.shape == g.shape

    def test_unknown(self):
        with pytest.raises(KeyError):
            ops.build_operator("nope", G)

    @pytest.mark.parametrize("name,header", [("truncated_riesz", "z"), ("local_riesz", "xi")])
    def test_export(self, tmp_path, name, header):
        path = tmp_path / f"{name}.csv"
        ops.export_profile(ops.build_operator(name, G), path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == [header, "re", "im"]
        assert len(rows) == G.samples_per_axis + 1

    def test_scaled_norm(self):
        assert ops.operator_norm(ops.scaled_identity(G, 2.5)) == pytest.approx(2.5, rel=1e-12)
