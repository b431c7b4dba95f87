"""Fast invariant suites, one group per module, used by ``hardylab selftest``."""

from __future__ import annotations

import math

import numpy as np

from . import atoms, grid as gc, harness, heat, operators, spaces
from .report import Report


def _row(module, check, value, threshold, passed):
    return {
        "case": {"module": module, "check": check},
        "module": module,
        "check": check,
        "value": float(value),
        "threshold": float(threshold),
        "passed": bool(passed),
    }


def _le(module, check, value, threshold):
    return _row(module, check, value, threshold, value <= threshold)


def grid_suite(seed):
    rng = np.random.default_rng(seed)
    g = gc.make_grid(1, 8.0, 256)
    f = gc.SampledField(g, rng.standard_normal(g.shape))
    rows = [_le("grid_core", "quadrature_of_one", abs(gc.quadrature(g.constant(1.0)) - 16.0), 1e-12)]
    rows.append(_le("grid_core", "delta_identity", np.max(np.abs(gc.convolve(f, gc.delta(g)).values - f.values)), 1e-12))
    parseval = abs(gc.lq_norm(f, 2) ** 2 - g.cell_volume * np.sum(np.abs(np.fft.fft(f.values)) ** 2) / g.size)
    rows.append(_le("grid_core", "parseval", parseval / gc.lq_norm(f, 2) ** 2, 1e-12))
    ball = gc.Ball((0.0,), 1.0)
    masks = [gc.annulus_mask(g, ball, j) for j in range(3)]
    overlap = int(sum(m.astype(int) for m in masks).max())
    cover = int(np.sum(sum(m.astype(int) for m in masks)) - np.sum(gc.ball_mask(g, (0.0,), 4.0)))
    rows.append(_row("grid_core", "annulus_partition", abs(cover) + overlap - 1, 0, overlap == 1 and cover == 0))
    return rows


def heat_suite(seed):
    rng = np.random.default_rng(seed)
    g = gc.make_grid(1, 8.0, 256)
    f = gc.SampledField(g, rng.standard_normal(g.shape))
    rows = []
    mass = abs(gc.quadrature(heat.heat_apply(f, 0.3)) - gc.quadrature(f)) / gc.lq_norm(f, 1)
    rows.append(_le("heat_maximal", "mass_conservation", mass, 1e-10))
    semi = heat.heat_apply(heat.heat_apply(f, 0.2), 0.3).values - heat.heat_apply(f, math.hypot(0.2, 0.3)).values
    rows.append(_le("heat_maximal", "semigroup", np.max(np.abs(semi)) / f.sup(), 1e-10))
    times = heat.TimeGrid.geometric()
    m = heat.maximal(f, times).values
    gap = max(float(np.max(np.abs(heat.heat_apply(f, t).values) - m)) for t in times)
    rows.append(_le("heat_maximal", "maximal_dominates", gap, 1e-12))
    a = g.field(lambda x: np.exp(-(x**2)))
    base = heat.hp_quasinorm(a, 1.0, times)
    fine = heat.hp_quasinorm(a, 1.0, heat.TimeGrid.geometric(48, 2 ** -0.25))
    rows.append(_le("heat_maximal", "time_grid_doubling", abs(fine - base) / base, 0.005))
    return rows


def spaces_suite(seed):
    g = gc.make_grid(1, 8.0, 256)
    bank = spaces.build_filter_bank(g, 3)
    r = g.freq_norm
    rows = [_le("function_spaces", "phi1_zero_at_origin", abs(bank.filters[1][0]), 0.0)]
    supp = max(float(np.max(bank.filters[0][r > 2])), float(np.max(bank.filters[2][(r < 2) | (r > 8)])))
    rows.append(_le("function_spaces", "filter_supports", supp, 0.0))
    rows.append(_le("function_spaces", "lip_of_constant", abs(spaces.lipschitz_norm(g.constant(3.0), 1.5, bank).value - 3.0), 1e-12))
    rows.append(_le("function_spaces", "bmo_of_constant", abs(spaces.bmo_norm(g.constant(2.0)).value - 2.0), 1e-12))
    chi = spaces.make_cutoff(spaces.CutoffSpec((0.0,)), g)
    d = np.abs(g.axis)
    bad = float(np.max(np.abs(chi.values[d <= 2] - 1)) + np.max(np.abs(chi.values[d >= 3])))
    rows.append(_le("function_spaces", "cutoff_levels", bad, 1e-14))
    return rows


def atoms_suite(seed):
    g = gc.make_grid(1, 8.0, 512)
    ball = gc.Ball((0.0,), 0.5)
    aspec = atoms.AtomSpec(0.8, 2, 1, ball)
    a = atoms.generate_atom(aspec, g, seed)
    cert = atoms.validate_atom(a, aspec)
    rows = [_row("atoms_molecules", "atom_round_trip", cert.margin, 1 + 1e-9, cert.passed)]
    mspec = atoms.MoleculeSpec(0.8, 2, 1.0, 1.2, ball)
    m = atoms.generate_molecule(mspec, g, seed)
    mc = atoms.validate_molecule(m, mspec)
    rows.append(_row("atoms_molecules", "molecule_round_trip", mc.worst, 0.9 + 1e-9, mc.passed and mc.worst <= 0.9 + 1e-9))
    dec = atoms.decompose_molecule(m, mspec)
    rows.append(_le("atoms_molecules", "reconstruction", dec.residual, 1e-8))
    rows.append(_le("atoms_molecules", "piece_moments", dec.certificates["max_moment_ratio"], 1e-10))
    basis = atoms.build_annular_basis(ball, 1, 1.2, g)
    ortho = np.array([[basis.pair(u, v) for v in basis.omega] for u in basis.omega])
    rows.append(_le("atoms_molecules", "basis_orthonormal", float(np.max(np.abs(ortho - np.eye(len(ortho))))), 1e-10))
    return rows


def operators_suite(seed):
    rng = np.random.default_rng(seed)
    g = gc.make_grid(1, 8.0, 256)
    f = gc.SampledField(g, rng.standard_normal(g.shape))
    h = gc.SampledField(g, rng.standard_normal(g.shape))
    rows = []
    T = operators.truncated_riesz(0, g)
    rows.append(_le("cz_operators", "riesz_kills_constants", T.apply(g.constant(1.0)).sup(), 1e-10))
    pair = abs(gc.inner(T.apply(f), h) - gc.inner(f, T.adjoint().apply(h)))
    rows.append(_le("cz_operators", "adjoint_pairing", pair / (gc.lq_norm(f, 2) * gc.lq_norm(h, 2)), 1e-9))
    R = operators.local_riesz(0, g)
    rows.append(_le("cz_operators", "local_riesz_norm", operators.operator_norm(R), 1 + 1e-6))
    rows.append(_le("cz_operators", "local_riesz_symbol_bound", float(np.max(np.abs(R.symbol))), 1.0))
    return rows


def harness_suite(seed):
    rows = []
    cfg = harness.TheoremConfig(1, 0.8, 1.5, 1.0)
    err = abs(cfg.delta - 1.75) + abs(cfg.mu - 0.5) + abs(cfg.p_lower - 0.4)
    rows.append(_le("theorem_harness", "exponent_arithmetic", err, 0.0))
    g = gc.make_grid(1, 8.0, 256)
    bank = spaces.build_filter_bank(g, 3)
    rep = harness.condition_1_7(operators.identity(g), 1.5, 1, [(0.0,), (1.0,)], bank)
    rows.append(_row("theorem_harness", "condition_identity_finite", rep.summary["sup"], math.inf, rep.summary["finite"]))
    ratio = harness.hp_operator_ratio(operators.scaled_identity(g, 2.0), 1.0, [("bump", g.field(lambda x: np.exp(-(x**2))))])
    rows.append(_le("theorem_harness", "hp_ratio_homogeneity", abs(ratio.summary["max_ratio"] - 2.0), 1e-10))
    return rows


def cli_suite(seed):
    from .config import RunConfig, default_config_path

    cfg = RunConfig.from_file(default_config_path())
    cfg.validate()
    return [_row("cli", "default_config_valid", 0, 0, True)]


SUITES = [grid_suite, heat_suite, spaces_suite, atoms_suite, operators_suite, harness_suite, cli_suite]


def run_selftest(seed: int = 0) -> Report:
    rows = []
    for suite in SUITES:
        rows.extend(suite(seed))
    modules = sorted({r["module"] for r in rows})
    summary = {
        "seed": seed,
        "modules": {m: all(r["passed"] for r in rows if r["module"] == m) for m in modules},
        "checks": len(rows),
        "failed": [f"{r['module']}:{r['check']}" for r in rows if not r["passed"]],
    }
    return Report("selftest", rows, summary, not summary["failed"])
