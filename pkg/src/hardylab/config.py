"""
Run configuration: an INI file with sections [grid], [time], [bank],
[operator], [theorem], [field], [sweep], [output] and [tolerances].

Geometry is validated before any computation; each violation names the
inequality that failed.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, GeometryError
from .grid import Ball, Grid, make_grid
from .heat import TimeGrid
from .spaces import max_band

OUTPUT_ENV = "HARDYLAB_OUT"

DEFAULT_TOLERANCES = {
    "refinement_ratio": 1.1,
    "spread": 0.05,
    "reconstruction": 1e-8,
    "stability": 0.10,
}


def default_config_path() -> Path:
    return Path(str(resources.files("hardylab") / "data" / "default.ini"))


def fixture_path(name: str = "molecule_fixture.hlf") -> Path:
    return Path(str(resources.files("hardylab") / "data" / name))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _point(text: str, dim: int) -> tuple[float, ...]:
    vals = _floats(text)
    if len(vals) == 1:
        vals = vals * dim
    if len(vals) != dim:
        raise ConfigError(f"point {text!r} does not have {dim} coordinates")
    return vals


@dataclass
class RunConfig:
    dim: int = 1
    half_width: float = 8.0
    samples: int = 1024
    time_k_max: int = 24
    time_ratio: float = 2**-0.5
    j_max: int = 6
    operator_kind: str = "explicit_kernel"
    operator_profile: str = "truncated_riesz"
    operator_params: dict = field(default_factory=dict)
    p: float = 0.8
    s: float = 1.5
    eps: float = 1.0
    ell: int = 2
    field_kind: str = "molecule"
    field_params: dict = field(default_factory=dict)
    x0: tuple = ()
    radii: tuple = (2.0, 1.0, 0.5, 0.25, 0.125, 0.0625)
    seeds: tuple = (0, 1, 2, 3)
    samples_hp: int = 30
    output_dir: str = "hardylab-out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "RunConfig":
        c = cls()
        try:
            if cp.has_section("grid"):
                g = cp["grid"]
                c.dim = g.getint("dim", c.dim)
                c.half_width = g.getfloat("L", c.half_width)
                samples = g.getfloat("N", c.samples)
                if samples != int(samples):
                    raise ConfigError(f"N must be an even integer, got {samples}")
                c.samples = int(samples)
            if cp.has_section("time"):
                c.time_k_max = cp["time"].getint("time_k_max", c.time_k_max)
                c.time_ratio = cp["time"].getfloat("time_ratio", c.time_ratio)
            if cp.has_section("bank"):
                c.j_max = cp["bank"].getint("j_max", c.j_max)
            if cp.has_section("operator"):
                sec = dict(cp["operator"])
                c.operator_kind = sec.pop("kind", c.operator_kind)
                c.operator_profile = sec.pop("profile", c.operator_profile)
                c.operator_params = {k: _scalar(v) for k, v in sec.items()}
            if cp.has_section("theorem"):
                t = cp["theorem"]
                c.p = t.getfloat("p", c.p)
                c.s = t.getfloat("s", c.s)
                c.eps = t.getfloat("eps", c.eps)
                c.ell = t.getint("ell", c.ell)
            if cp.has_section("field"):
                sec = dict(cp["field"])
                c.field_kind = sec.pop("kind", c.field_kind)
                c.field_params = sec
            if cp.has_section("sweep"):
                sw = cp["sweep"]
                if "x0" in sw:
                    c.x0 = tuple(_floats(sw["x0"]))
                if "radii" in sw:
                    c.radii = _floats(sw["radii"])
                if "seeds" in sw:
                    c.seeds = tuple(int(v) for v in _floats(sw["seeds"]))
                c.samples_hp = sw.getint("samples", c.samples_hp)
            if cp.has_section("output"):
                c.output_dir = cp["output"].get("dir", c.output_dir)
            if cp.has_section("tolerances"):
                for k, v in cp["tolerances"].items():
                    c.tolerances[k] = float(v)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from exc
        return c

    # -- derived objects ----------------------------------------------------

    def grid(self, refine: int = 1) -> Grid:
        try:
            return make_grid(self.dim, self.half_width, self.samples * refine)
        except GeometryError as exc:
            raise ConfigError(str(exc)) from exc

    def times(self, refine: int = 1) -> TimeGrid:
        try:
            return TimeGrid.geometric(self.time_k_max * refine, self.time_ratio ** (1.0 / refine))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def out_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)

    def centers(self) -> list[tuple[float, ...]]:
        if self.x0:
            if self.dim == 1:
                return [(v,) for v in self.x0]
            if len(self.x0) % self.dim:
                raise ConfigError(f"x0 list length {len(self.x0)} is not a multiple of dim={self.dim}")
            return [tuple(self.x0[i : i + self.dim]) for i in range(0, len(self.x0), self.dim)]
        return [(0.0,) * self.dim]

    def field_value(self, key, default, cast=float):
        raw = self.field_params.get(key)
        return default if raw is None else cast(raw)

    def field_center(self) -> tuple[float, ...]:
        raw = self.field_params.get("center")
        return (0.0,) * self.dim if raw is None else _point(raw, self.dim)

    def validate(self) -> None:
        """Check every geometric constraint; raise ConfigError naming the failed inequality."""
        grid = self.grid()
        top = max_band(grid)
        if not 1 <= self.j_max <= top:
            raise ConfigError(
                f"bank j_max={self.j_max} violates 1 <= j_max <= log2(pi N/(2L)) - 1 "
                f"= {math.log2(grid.nyquist) - 1:.3f}"
            )
        self.times()
        for r in self.radii:
            if not r > 0:
                raise ConfigError(f"sweep radius {r} violates r_B > 0")
            if not r <= self.half_width / 2:
                raise ConfigError(f"sweep radius {r} violates r_B <= L/2 = {self.half_width / 2}")
        for c in self.centers():
            if not all(abs(v) + 3 <= self.half_width for v in c):
                raise ConfigError(f"x0={c} violates |x0_i| + 3 <= L = {self.half_width} (B(x0,3) must fit)")
        if self.field_kind in ("atom", "molecule"):
            r = self.field_value("radius", 0.5)
            ball = Ball(self.field_center(), r)
            if not (r <= self.half_width / 2 and grid.contains_ball(ball.center, r)):
                raise ConfigError(f"field ball {ball} violates r_B <= L/2 and |x_B,i| + r_B <= L")
        if self.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {self.threads}")


def _scalar(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v
