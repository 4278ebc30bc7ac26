"""Run configuration: a nested YAML document with a closed set of keys.

Unknown keys are rejected so that a misspelled tolerance cannot silently
fall back to its default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .analytic import AnalyticPotential
from .continuation import PathOptions
from .errors import DomainError
from .fileformat import read_field
from .geometry import BackgroundForm, build_structure, load_structure
from .grid import GridSpec, ScalarField
from .solver import SolveOptions


class ConfigError(DomainError):
    """The run configuration is malformed."""


SECTIONS = {
    "geometry": {"preset", "epsilon", "n", "points_per_axis", "directory"},
    "omega": {"constant_multiple", "potential"},
    "problem": {"mode", "h", "u_star", "u0", "c0", "u_sub", "u_hat"},
    "solver": {f.name for f in fields(SolveOptions)},
    "path": {f.name for f in fields(PathOptions)},
    "output": {"directory", "checkpoint_every", "series_file"},
    "checks": {"concavity_trials"},
    "seed": None,
}
MODES = ("solve", "path", "manufactured")


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    geometry: dict
    omega: dict
    problem: dict
    solver: SolveOptions
    path: PathOptions
    output: dict
    checks: dict = field(default_factory=dict)
    seed: int = 0

    def resolved(self) -> dict:
        """The full configuration with defaults filled in."""
        return {
            "geometry": dict(self.geometry),
            "omega": dict(self.omega),
            "problem": dict(self.problem),
            "solver": self.solver.as_dict(),
            "path": self.path.as_dict(),
            "output": dict(self.output),
            "checks": dict(self.checks),
            "seed": self.seed,
        }


def _check_keys(section: str, mapping, allowed):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")


def parse_config(raw: dict, base_dir=".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for name, allowed in SECTIONS.items():
        if allowed is not None and name in raw:
            _check_keys(name, raw[name], allowed)

    geometry = {"preset": "flat", "epsilon": 0.0, "n": 2, "points_per_axis": 16}
    geometry.update(raw.get("geometry", {}))
    try:
        GridSpec(int(geometry["n"]), int(geometry["points_per_axis"]))
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    if geometry["preset"] not in ("flat", "twisted", "tabulated"):
        raise ConfigError(f"geometry.preset must be flat, twisted or tabulated, got {geometry['preset']!r}")
    if geometry["preset"] == "tabulated" and not geometry.get("directory"):
        raise ConfigError("geometry.directory is required for the tabulated preset")

    omega = dict(raw.get("omega", {}))
    if "constant_multiple" not in omega and "potential" not in omega:
        raise ConfigError("omega needs constant_multiple and/or potential")
    if "constant_multiple" in omega:
        a = omega["constant_multiple"]
        if not isinstance(a, (int, float)) or not a > 0:
            raise ConfigError(f"omega.constant_multiple must be a positive number, got {a!r}")

    problem = {"mode": "solve", "c0": 0.0}
    problem.update(raw.get("problem", {}))
    if problem["mode"] not in MODES:
        raise ConfigError(f"problem.mode must be one of {MODES}, got {problem['mode']!r}")
    if problem["mode"] == "manufactured":
        problem.setdefault("h", "from_u_star")
        if problem["h"] != "from_u_star":
            raise ConfigError("manufactured mode takes h from u_star; remove problem.h")
    if "h" not in problem:
        raise ConfigError("problem.h is required")
    h = problem["h"]
    if h == "from_u_star":
        if "u_star" not in problem:
            raise ConfigError("problem.h = from_u_star needs problem.u_star")
    elif isinstance(h, (int, float)):
        n = int(geometry["n"])
        lo, hi = (n - 1) * math.pi / 2, n * math.pi / 2
        if not lo < h < hi:
            raise ConfigError(f"constant h = {h} is not in the hypercritical range ({lo:.6g}, {hi:.6g})")
    elif not (isinstance(h, dict) and set(h) == {"file"}):
        raise ConfigError("problem.h must be a number, {file: path} or from_u_star")
    if problem["mode"] == "path" and not isinstance(h, (int, float)):
        raise ConfigError("path mode needs a constant h")

    try:
        solver = SolveOptions(**raw.get("solver", {}))
        path = PathOptions(**raw.get("path", {}))
    except (DomainError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    output = {"directory": "dhym-output", "checkpoint_every": 1, "series_file": "series.csv"}
    output.update(raw.get("output", {}))
    if int(output["checkpoint_every"]) < 1:
        raise ConfigError("output.checkpoint_every must be >= 1")
    checks = {"concavity_trials": 100}
    checks.update(raw.get("checks", {}))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return RunConfig(raw, Path(base_dir), geometry, omega, problem, solver, path, output, checks, seed)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw, path.parent)


@dataclass
class Problem:
    """Objects built from a configuration."""

    spec: GridSpec
    structure: object
    omega: BackgroundForm


def build_problem(cfg: RunConfig) -> Problem:
    geo = cfg.geometry
    if geo["preset"] == "tabulated":
        S = load_structure(cfg.base_dir / geo["directory"])
        spec = S.spec
        if spec != GridSpec(int(geo["n"]), int(geo["points_per_axis"])):
            raise ConfigError("tabulated structure grid disagrees with geometry.n / points_per_axis")
    else:
        spec = GridSpec(int(geo["n"]), int(geo["points_per_axis"]))
        params = {"epsilon": float(geo["epsilon"])} if geo["preset"] == "twisted" else {}
        S = build_structure(geo["preset"], params, spec)
    a = float(cfg.omega.get("constant_multiple", 0.0))
    if "potential" in cfg.omega:
        v = field_source(cfg, cfg.omega["potential"], spec)
        g = BackgroundForm.from_potential(S, a * S.chi, v)
    else:
        g = BackgroundForm.multiple_of_chi(S, a)
    return Problem(spec, S, g)


def potential_source(cfg: RunConfig, source, spec: GridSpec):
    """An :class:`AnalyticPotential` for ``{expr: ...}`` sources, else None."""
    if isinstance(source, dict) and set(source) == {"expr"}:
        return AnalyticPotential(str(source["expr"]), spec.n)
    return None


def field_source(cfg: RunConfig, source, spec: GridSpec) -> ScalarField:
    """Resolve a number, ``{expr: ...}`` or ``{file: ...}`` into a field."""
    if source is None:
        return ScalarField.constant(spec, 0.0)
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        return ScalarField.constant(spec, float(source))
    if isinstance(source, dict) and set(source) == {"expr"}:
        return AnalyticPotential(str(source["expr"]), spec.n).field(spec)
    if isinstance(source, dict) and set(source) == {"file"}:
        f, _ = read_field(cfg.base_dir / source["file"])
        if f.spec != spec:
            raise ConfigError(f"field file {source['file']} has grid {f.spec}, expected {spec}")
        return f
    raise ConfigError(f"cannot interpret field source {source!r}")
