"""Command-line front end: ``dhym solve|path|check|manufacture <config>``.

Exit codes: 0 success, 1 a requested check failed, 2 configuration or
precondition error, 3 Newton did not converge, 4 invariant violation or
invalid structure, 5 continuity path failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileformat
from .config import ConfigError, RunConfig, build_problem, field_source, load_config, potential_source
from .continuation import continuity_path, write_checkpoint
from .errors import DHYMError, DomainError, NonConvergenceError, PathError
from .geometry import validate_structure
from .monitors import SERIES_COLUMNS, check_concavity_at_state, track_path
from .solver import manufacture, manufacture_exact, solve
from .subsolution import check_c_subsolution, check_supersolution

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_INVARIANT = 4
EXIT_PATH = 5

log = logging.getLogger("dhym")


class StructureError(DHYMError):
    """The geometric structure could not be loaded or failed validation."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def _emit(record: dict):
    print(fileformat.format_record(record))


def _output_dir(cfg: RunConfig, override) -> Path:
    out = Path(override) if override else cfg.base_dir / cfg.output["directory"]
    out.mkdir(parents=True, exist_ok=True)
    return out


def _setup(cfg: RunConfig):
    """Build the problem and validate its structure."""
    try:
        problem = build_problem(cfg)
    except ConfigError:
        raise
    except DomainError as exc:
        if cfg.geometry["preset"] == "tabulated":
            raise StructureError(f"cannot load structure: {exc}") from exc
        raise ConfigError(str(exc)) from exc
    report = validate_structure(problem.structure)
    if not report["pass"]:
        raise StructureError("structure validation failed", report)
    return problem


def _target(cfg: RunConfig, problem):
    """The right-hand side ``h`` and, in manufactured mode, the exact solution."""
    spec, S, g = problem.spec, problem.structure, problem.omega
    h = cfg.problem["h"]
    if h == "from_u_star":
        source = cfg.problem["u_star"]
        analytic = potential_source(cfg, source, spec)
        u_star = field_source(cfg, source, spec)
        h_field = manufacture_exact(analytic, g, S) if analytic is not None else manufacture(u_star, g, S)
        return h_field, u_star
    return field_source(cfg, h, spec), None


def _check_target_range(h_field, n):
    lo, hi = (n - 1) * np.pi / 2, n * np.pi / 2
    if not (np.min(h_field.values) > lo and np.max(h_field.values) < hi):
        raise ConfigError(
            f"h must lie in ({lo:.6g}, {hi:.6g}); got range "
            f"[{np.min(h_field.values):.6g}, {np.max(h_field.values):.6g}]"
        )


def cmd_solve(cfg: RunConfig, output_dir=None, skip_subsolution_check=False) -> int:
    problem = _setup(cfg)
    spec, S, g = problem.spec, problem.structure, problem.omega
    h, u_star = _target(cfg, problem)
    _check_target_range(h, S.n)
    record = {"command": "solve", "config": cfg.resolved()}
    u_sub = field_source(cfg, cfg.problem.get("u_sub"), spec)
    if not skip_subsolution_check:
        sub = check_c_subsolution(u_sub, h, g, S)
        record["subsolution"] = sub.as_dict()
        if not sub.is_subsolution:
            record["error"] = "u_sub is not a C-subsolution"
            _emit(record)
            return EXIT_CONFIG
    u0 = field_source(cfg, cfg.problem.get("u0"), spec)
    out = _output_dir(cfg, output_dir)
    try:
        u, c, report = solve(h, u0, float(cfg.problem["c0"]), g, S, cfg.solver)
    except NonConvergenceError as exc:
        record.update(error=str(exc), history=exc.history)
        fileformat.write_record(out / "result.json", record)
        _emit(record)
        return EXIT_NONCONVERGENCE
    except DHYMError as exc:
        record["error"] = str(exc)
        fileformat.write_record(out / "result.json", record)
        _emit(record)
        return EXIT_NONCONVERGENCE
    fileformat.write_field(out / "solution.field", u, "u", c=c)
    record.update(
        c=c,
        residual=report.residual,
        iterations=report.iterations,
        history=report.history,
        snapshot=report.snapshot,
        inequalities=report.inequalities,
        concavity=check_concavity_at_state(u, g, S, int(cfg.checks["concavity_trials"]), cfg.seed),
    )
    if u_star is not None:
        record["max_error_vs_u_star"] = float(np.max(np.abs(u.values - u_star.mean_zero().values)))
    fileformat.write_record(out / "result.json", record)
    _emit(record)
    if not report.inequalities["pass"] or not record["concavity"]["pass"]:
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_manufacture(cfg: RunConfig, output_dir=None) -> int:
    problem = _setup(cfg)
    if "u_star" not in cfg.problem:
        raise ConfigError("manufacture needs problem.u_star")
    source = cfg.problem["u_star"]
    analytic = potential_source(cfg, source, problem.spec)
    if analytic is not None:
        h = manufacture_exact(analytic, problem.omega, problem.structure)
    else:
        h = manufacture(field_source(cfg, source, problem.spec), problem.omega, problem.structure)
    out = _output_dir(cfg, output_dir)
    fileformat.write_field(out / "h.field", h, "h")
    _emit({"command": "manufacture", "h_min": float(np.min(h.values)), "h_max": float(np.max(h.values)), "file": str(out / "h.field")})
    return EXIT_OK


def cmd_path(cfg: RunConfig, output_dir=None) -> int:
    problem = _setup(cfg)
    spec, S, g = problem.spec, problem.structure, problem.omega
    h1 = float(cfg.problem["h"])
    u_hat = field_source(cfg, cfg.problem.get("u_hat"), spec)
    u_sub = field_source(cfg, cfg.problem.get("u_sub"), spec)
    record = {"command": "path", "config": cfg.resolved()}
    sup = check_supersolution(u_hat, h1, g, S)
    record["supersolution"] = sup.as_dict()
    if not sup.theorem_hypotheses:
        record["error"] = "u_hat is not a hypercritical supersolution for h"
        _emit(record)
        return EXIT_CONFIG
    sub = check_c_subsolution(u_sub, h1, g, S)
    record["subsolution"] = sub.as_dict()
    if not sub.is_subsolution:
        record["error"] = "u_sub is not a C-subsolution for h"
        _emit(record)
        return EXIT_CONFIG

    out = _output_dir(cfg, output_dir)
    ckpt = out / "checkpoints"
    every = int(cfg.output["checkpoint_every"])
    last = {}
    accepted = []

    def on_state(index, state):
        last["index"], last["state"] = index, state
        accepted.append(state)
        if index % every == 0:
            write_checkpoint(ckpt, index, state)

    def finish(states):
        # the last accepted state is always kept
        if "state" in last and last["index"] % every != 0:
            write_checkpoint(ckpt, last["index"], last["state"])
        tracked = track_path(states, h1, sup.theta0, g, S, u_sub, cfg.path.invariant_tol, cfg.path.target_tol)
        fileformat.write_series(out / cfg.output["series_file"], tracked["series"], list(SERIES_COLUMNS))
        record["states"] = len(states)
        record["track"] = {"pass": tracked["pass"], "violations": tracked["violations"]}
        if states:
            record.update(t_final=states[-1].t, c_final=states[-1].c, residual=states[-1].residual)
        return tracked

    try:
        states = continuity_path(h1, u_hat, u_sub, g, S, cfg.solver, cfg.path, on_state=on_state)
    except PathError as exc:
        finish(accepted)
        record.update(error=str(exc), dump=exc.dump)
        fileformat.write_record(out / "result.json", record)
        _emit(record)
        return EXIT_PATH
    tracked = finish(states)
    fileformat.write_field(out / "solution.field", states[-1].u, "u", c=states[-1].c)
    fileformat.write_record(out / "result.json", record)
    _emit(record)
    return EXIT_OK if tracked["pass"] else EXIT_INVARIANT


def cmd_check(cfg: RunConfig, subsolution=False, supersolution=False, structure=False) -> int:
    if not (subsolution or supersolution or structure):
        subsolution = supersolution = structure = True
    record = {"command": "check"}
    try:
        problem = _setup(cfg)
    except StructureError as exc:
        record.update(error=str(exc), structure=exc.report)
        _emit(record)
        return EXIT_INVARIANT
    spec, S, g = problem.spec, problem.structure, problem.omega
    ok = True
    if structure:
        record["structure"] = validate_structure(S)
    h, _ = _target(cfg, problem)
    if subsolution:
        sub = check_c_subsolution(field_source(cfg, cfg.problem.get("u_sub"), spec), h, g, S)
        record["subsolution"] = sub.as_dict()
        ok &= sub.is_subsolution
    if supersolution:
        sup = check_supersolution(field_source(cfg, cfg.problem.get("u_hat"), spec), h, g, S)
        record["supersolution"] = sup.as_dict()
        ok &= sup.theorem_hypotheses
    record["pass"] = bool(ok)
    _emit(record)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dhym", description="dHYM solver on periodic almost Hermitian tori")
    parser.add_argument("-v", "--verbose", action="store_true", help="log Newton and path progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--output-dir", help="override output.directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        return p

    p = common(sub.add_parser("solve", help="solve for (u, c)"))
    p.add_argument("--skip-subsolution-check", action="store_true")
    common(sub.add_parser("path", help="run the continuity path to a constant target"))
    p = common(sub.add_parser("check", help="validate structure, subsolution and supersolution"))
    p.add_argument("--subsolution", action="store_true")
    p.add_argument("--supersolution", action="store_true")
    p.add_argument("--structure", action="store_true")
    common(sub.add_parser("manufacture", help="write the h field generated by u_star"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.command == "solve":
            return cmd_solve(cfg, args.output_dir, args.skip_subsolution_check)
        if args.command == "path":
            return cmd_path(cfg, args.output_dir)
        if args.command == "check":
            return cmd_check(cfg, args.subsolution, args.supersolution, args.structure)
        return cmd_manufacture(cfg, args.output_dir)
    except StructureError as exc:
        _emit({"error": str(exc), "structure": exc.report})
        return EXIT_INVARIANT
    except DomainError as exc:
        print(f"dhym: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
