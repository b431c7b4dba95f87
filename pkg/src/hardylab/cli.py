"""
Command-line front end.

    hardylab <subcommand> [--config FILE] [--seed N] [--threads K] [--out DIR] [--field FILE]

Each subcommand writes ``<name>.csv`` and ``<name>.json`` into the output
directory (``--out``, else $HARDYLAB_OUT, else ``[output] dir``).
Exit status: 0 pass, 1 numeric failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import atoms, harness, heat, operators, spaces
from .config import RunConfig, default_config_path, fixture_path
from .errors import ConfigError, DecompositionError, GeometryError, HardyLabError
from .grid import Ball, SampledField, read_field, write_field
from .report import Report
from .selftest import run_selftest

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SUBCOMMANDS = (
    "maximal",
    "hp-norm",
    "lip-norm",
    "bmo-norm",
    "make-atom",
    "make-molecule",
    "validate",
    "decompose",
    "czoi-check",
    "condition-1-7",
    "atom-map",
    "cancellation",
    "hp-ratio",
    "selftest",
)


# -- field construction ------------------------------------------------------


def _atom_spec(cfg: RunConfig) -> atoms.AtomSpec:
    ball = Ball(cfg.field_center(), cfg.field_value("radius", 0.5))
    q = cfg.field_value("q", 2.0)
    return atoms.AtomSpec(cfg.field_value("p", cfg.p), q, cfg.field_value("M", 1, int), ball)


def _molecule_spec(cfg: RunConfig) -> atoms.MoleculeSpec:
    ball = Ball(cfg.field_center(), cfg.field_value("radius", 0.5))
    return atoms.MoleculeSpec(
        cfg.field_value("p", cfg.p),
        cfg.field_value("q", 2.0),
        cfg.field_value("delta", 1.0),
        cfg.field_value("s", 1.2),
        ball,
    )


def _input_field(cfg: RunConfig, args) -> SampledField:
    path = args.field or cfg.field_params.get("file")
    if path:
        return read_field(path)
    kind = cfg.field_kind
    if kind == "fixture":
        return read_field(fixture_path())
    grid = cfg.grid()
    if kind == "atom":
        return atoms.generate_atom(_atom_spec(cfg), grid, cfg.seed)
    if kind == "molecule":
        return atoms.generate_molecule(_molecule_spec(cfg), grid, cfg.seed)
    if kind == "cutoff":
        alpha = tuple(int(v) for v in cfg.field_params.get("alpha", "0").split())
        alpha = alpha * grid.dim if len(alpha) == 1 else alpha
        return spaces.make_poly_cutoff(cfg.field_center(), alpha, grid)
    if kind == "gaussian":
        width = cfg.field_value("width", 1.0)
        return grid.field(lambda *x: np.exp(-sum(c**2 for c in x) / (2 * width**2)))
    raise ConfigError(f"unknown field kind {kind!r}; use atom, molecule, cutoff, gaussian, fixture or file=")


def _operator(cfg: RunConfig, grid=None):
    grid = grid or cfg.grid()
    try:
        T = operators.build_operator(cfg.operator_profile, grid, cfg.operator_params)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    if cfg.operator_kind not in ("", T.kind):
        raise ConfigError(f"operator profile {cfg.operator_profile!r} has kind {T.kind!r}, config says {cfg.operator_kind!r}")
    return T


def _line_rows(source: SampledField, **columns):
    """Rows along the first axis through the centre (all axes for 1D)."""
    g = source.grid
    half = g.samples_per_axis // 2
    sl = (slice(None),) + (half,) * (g.dim - 1)
    rows = []
    for i in range(g.samples_per_axis):
        row = {"case": i, "x": float(g.axis[i])}
        for name, arr in columns.items():
            v = np.asarray(arr)[sl][i]
            row[name] = float(v.real) if not np.iscomplexobj(v) or v.imag == 0 else complex(v)
        rows.append(row)
    return rows


# -- subcommands ------------------------------------------------------------------


def cmd_maximal(cfg, args):
    f = _input_field(cfg, args)
    mf = heat.maximal(f, cfg.times())
    rows = _line_rows(f, f=f.values.real, maximal=mf.values)
    return Report("maximal", rows, {"sup_f": f.sup(), "sup_maximal": mf.sup(), "times": len(cfg.times())})


def cmd_hp_norm(cfg, args):
    f = _input_field(cfg, args)
    p = cfg.field_value("p", cfg.p)
    base = heat.hp_quasinorm(f, p, cfg.times())
    fine = heat.hp_quasinorm(f, p, cfg.times(refine=2))
    change = abs(fine - base) / base if base > 0 else 0.0
    tol = cfg.tolerances.get("time_doubling", 0.005)
    rows = [
        {"case": "base", "time_grid": "base", "k": cfg.time_k_max, "value": base},
        {"case": "doubled", "time_grid": "doubled", "k": 2 * cfg.time_k_max, "value": fine},
    ]
    return Report("hp_norm", rows, {"p": p, "hp_norm": base, "doubled_change": change}, change <= tol)


def cmd_lip_norm(cfg, args):
    f = _input_field(cfg, args)
    bank = spaces.build_filter_bank(f.grid, cfg.j_max)
    res = spaces.lipschitz_norm(f, cfg.s, bank)
    rows = [{"case": j, "j": j, "weighted_sup": v} for j, v in enumerate(res.profile)]
    return Report("lip_norm", rows, {"s": cfg.s, "value": res.value, "argmax_j": res.argmax}, math.isfinite(res.value))


def cmd_bmo_norm(cfg, args):
    f = _input_field(cfg, args)
    res = spaces.bmo_norm(f)
    per_radius = {}
    for _, radius, value, regime in res.rows:
        key = (radius, regime)
        per_radius[key] = max(per_radius.get(key, 0.0), value)
    rows = [{"case": r, "radius": r, "regime": reg, "max_average": v} for (r, reg), v in sorted(per_radius.items())]
    summary = {"value": res.value, "large_ball": res.large_ball, "small_ball": res.small_ball, "balls": len(res.rows)}
    return Report("bmo_norm", rows, summary)


def _field_out(cfg, name):
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out / f"{name}.hlf"


def cmd_make_atom(cfg, args):
    spec = _atom_spec(cfg)
    a = atoms.generate_atom(spec, cfg.grid(), cfg.seed)
    cert = atoms.validate_atom(a, spec)
    path = _field_out(cfg, "atom")
    write_field(path, a)
    rows = _line_rows(a, a=a.values)
    summary = {"field": path.name, "margin": cert.margin, "leakage": cert.leakage, "moment_residual": cert.moment_residual}
    return Report("make_atom", rows, summary, cert.passed)


def cmd_make_molecule(cfg, args):
    spec = _molecule_spec(cfg)
    m, info = atoms.synthesize_molecule(spec, cfg.grid(), cfg.seed)
    cert = atoms.validate_molecule(m, spec)
    path = _field_out(cfg, "molecule")
    write_field(path, m)
    rows = [{"case": j, "j": j, "margin": v} for j, v in enumerate(cert.annulus_margins)]
    summary = {
        "field": path.name,
        "worst": cert.worst,
        "moment_margins": cert.moment_margins,
        "kappa": info["kappa"],
        "head_fractions": info["head_fractions"],
    }
    return Report("make_molecule", rows, summary, cert.passed and cert.worst <= 0.9 + 1e-9)


def cmd_validate(cfg, args):
    f = _input_field(cfg, args)
    if cfg.field_kind == "atom":
        spec = _atom_spec(cfg)
        cert = atoms.validate_atom(f, spec)
        rows = [{"case": "atom", "leakage": cert.leakage, "margin": cert.margin, "moment_residual": cert.moment_residual}]
        return Report("validate", rows, {"kind": "atom", "failures": cert.failures}, cert.passed)
    spec = _molecule_spec(cfg)
    cert = atoms.validate_molecule(f, spec)
    rows = [{"case": j, "j": j, "margin": v} for j, v in enumerate(cert.annulus_margins)]
    summary = {"kind": "molecule", "worst": cert.worst, "worst_annulus": cert.worst_annulus, "failures": cert.failures}
    return Report("validate", rows, summary, cert.passed)


def cmd_decompose(cfg, args):
    m = _input_field(cfg, args)
    spec = _molecule_spec(cfg)
    try:
        res = atoms.decompose_molecule(m, spec)
    except DecompositionError as exc:
        path = _field_out(cfg, "residual")
        if exc.residual is not None:
            write_field(path, exc.residual)
        return Report("decompose", [], {"error": str(exc), "residual_field": path.name}, False)
    rep = res.report()
    rows = []
    for j, c in enumerate(rep["annulus_C1"]):
        row = {"case": j, "j": j, "C1_j": c, "condition": rep["condition_numbers"][j] if rep["condition_numbers"] else 0.0}
        if len(res.N):
            row["N"] = [float(abs(v)) for v in res.N[j]]
        rows.append(row)
    return Report("decompose", rows, {k: v for k, v in rep.items() if k != "annulus_C1"}, rep["residual"] <= cfg.tolerances["reconstruction"])


def cmd_czoi(cfg, args):
    T = _operator(cfg)
    params = operators.CzoiParams(int(cfg.operator_params.get("M", 0)), float(cfg.operator_params.get("czoi_eps", cfg.eps)))
    res = operators.czoi_check(T, params, {"ratio_tol": cfg.tolerances["refinement_ratio"]})
    rows = [{"case": lo, "shell_lo": lo, "shell_hi": hi, "size": v} for lo, hi, v in res["shells"]]
    summary = {k: v for k, v in res.items() if k != "shells"}
    tol = cfg.tolerances["refinement_ratio"]
    failed = [f"{key} = {res[key]:.4g} > {tol}" for key in ("size_ratio", "holder_ratio") if not res[key] <= tol]
    if not math.isfinite(res["l2_norm"]):
        failed.append("L2 operator norm is not finite")
    if failed:
        summary["failed"] = failed
    return Report("czoi_check", rows, summary, res["passed"])


def cmd_condition(cfg, args):
    grid = cfg.grid()
    T = _operator(cfg, grid)
    bank = spaces.build_filter_bank(grid, cfg.j_max)
    centers = cfg.centers()
    return harness.condition_1_7(T, cfg.s, math.floor(cfg.s), centers, bank, spread_tol=cfg.tolerances["spread"], workers=cfg.threads)


def _sweep(cfg):
    return [(c, r, s) for c in cfg.centers()[:1] for r in cfg.radii for s in cfg.seeds]


def cmd_atom_map(cfg, args):
    tcfg = harness.TheoremConfig(cfg.dim, cfg.p, cfg.s, cfg.eps)
    tcfg.check_mapping_mode()
    coarse = harness.atom_to_molecule_check(_operator(cfg, cfg.grid()), tcfg, _sweep(cfg), workers=cfg.threads)
    fine = harness.atom_to_molecule_check(_operator(cfg, cfg.grid(2)), tcfg, _sweep(cfg), workers=cfg.threads)
    cmp = harness.compare_refinement(coarse, fine, tol=cfg.tolerances["stability"])
    coarse.summary["refinement"] = cmp
    coarse.passed = coarse.passed and fine.passed and cmp["stable"]
    if not cmp["stable"]:
        coarse.summary["failed"] = [f"fitted C changed by {cmp['change']:.3g} under N doubling"]
    return coarse


def cmd_cancellation(cfg, args):
    tcfg = harness.TheoremConfig(cfg.dim, cfg.p, cfg.s, cfg.eps)
    radii = [r for r in cfg.radii if r < 1]
    if not radii:
        raise ConfigError("cancellation needs at least one sweep radius r_B < 1")
    return harness.cancellation_sweep(_operator(cfg), tcfg, radii, cfg.seeds)


def cmd_hp_ratio(cfg, args):
    p = cfg.p
    reports = []
    for refine in (1, 2):
        grid = cfg.grid(refine)
        samples = harness.hp_sample_set(grid, p, cfg.samples_hp, cfg.seed)
        reports.append(harness.hp_operator_ratio(_operator(cfg, grid), p, samples, cfg.times()))
    coarse, fine = reports
    cmp = harness.compare_refinement(coarse, fine, key="max_ratio", tol=cfg.tolerances["stability"])
    coarse.summary["refinement"] = cmp
    coarse.passed = coarse.passed and cmp["stable"]
    if not cmp["stable"]:
        coarse.summary["failed"] = [f"max h^p ratio changed by {cmp['change']:.3g} under N doubling"]
    return coarse


def cmd_selftest(cfg, args):
    return run_selftest(cfg.seed)


COMMANDS = {
    "maximal": cmd_maximal,
    "hp-norm": cmd_hp_norm,
    "lip-norm": cmd_lip_norm,
    "bmo-norm": cmd_bmo_norm,
    "make-atom": cmd_make_atom,
    "make-molecule": cmd_make_molecule,
    "validate": cmd_validate,
    "decompose": cmd_decompose,
    "czoi-check": cmd_czoi,
    "condition-1-7": cmd_condition,
    "atom-map": cmd_atom_map,
    "cancellation": cmd_cancellation,
    "hp-ratio": cmd_hp_ratio,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardylab", description="Numerical experiments on local Hardy spaces.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, default=None, help="INI run configuration (default: shipped)")
    parser.add_argument("--seed", type=int, default=None, help="random seed (overrides [field] seed)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--field", type=Path, default=None, help="input field file (.hlf or .csv)")
    return parser


def run(subcommand: str, config_path=None, seed=None, threads=1, out=None, field=None) -> int:
    args = argparse.Namespace(field=field)
    try:
        cfg = RunConfig.from_file(config_path or default_config_path())
        if seed is not None:
            cfg.seed = seed
        else:
            cfg.seed = int(cfg.field_params.get("seed", 0))
        cfg.threads = threads
        if out is not None:
            cfg.output_dir = str(out)
        cfg.validate()
    except (ConfigError, GeometryError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = COMMANDS[subcommand](cfg, args)
    except (ConfigError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HardyLabError as exc:
        print(f"{subcommand} failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    csv_path, json_path = report.write(cfg.out_dir())
    status = "pass" if report.passed else "FAIL"
    print(f"{subcommand}: {status} ({csv_path}, {json_path})")
    if not report.passed:
        failed = report.summary.get("failed") or report.summary.get("failures")
        if failed:
            print(f"violated: {failed}", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.seed, args.threads, args.out, args.field)


if __name__ == "__main__":
    sys.exit(main())
