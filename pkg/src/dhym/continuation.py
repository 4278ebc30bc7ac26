"""Continuity path from a supersolution to a constant hypercritical target.

The family solved is

    phase(lambda(u_t)) = (1 - t) * theta0 + t * h1 + c_t,

with ``theta0 = phase(lambda(u_hat))``. At ``t = 0`` the pair
``(u_hat, 0)`` is an exact solution. Every accepted state is checked
against the bounds the existence argument relies on.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fileformat
from .errors import DHYMError, DomainError, PathError
from .geometry import AlmostHermitianStructure, BackgroundForm
from .grid import ScalarField
from .solver import SolveOptions, _evaluate, as_field, hypercritical_floor, solve
from .subsolution import check_c_subsolution, check_supersolution, subsolution_margins

log = logging.getLogger(__name__)

FLAG_NAMES = ("c_upper", "c_lower", "target_hypercritical", "subsolution", "gamma_n")


@dataclass(frozen=True)
class PathOptions:
    dt_init: float = 0.1
    dt_min: float = 1e-4
    dt_growth: float = 1.5
    invariant_tol: float = 1e-8
    target_tol: float = 1e-10

    def __post_init__(self):
        if not (self.dt_init > 0 and self.dt_min > 0 and self.dt_growth >= 1):
            raise DomainError("need dt_init > 0, dt_min > 0 and dt_growth >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ContinuityState:
    t: float
    u: ScalarField = field(repr=False)
    c: float
    newton_iters: int
    residual: float
    flags: dict
    margins: dict

    @property
    def ok(self) -> bool:
        return all(self.flags.values())


def _inspect(t, u, c, theta0, h1, u_sub, g, S, popts: PathOptions):
    """Flags and margins of the path bounds at one state."""
    target = (1.0 - t) * theta0 + t * h1 + c
    ev_u = _evaluate(u.values, g, S)
    sup_gap = float(np.max(h1 - theta0))
    inf_theta0 = float(np.min(theta0))
    sub_lam = _evaluate(u_sub.values, g, S).lam
    sub_margin = float(np.min(subsolution_margins(sub_lam, target)))
    margins = {
        "c_upper": -c,
        "c_lower": c + t * sup_gap,
        "target_hypercritical": float(np.min(target)) - inf_theta0,
        "subsolution": sub_margin,
        "gamma_n": float(np.min(ev_u.lam)),
    }
    flags = {
        "c_upper": margins["c_upper"] >= -popts.invariant_tol,
        "c_lower": margins["c_lower"] >= -popts.invariant_tol,
        "target_hypercritical": margins["target_hypercritical"] >= -popts.target_tol,
        "subsolution": sub_margin > 0.0,
        "gamma_n": margins["gamma_n"] > 0.0,
    }
    res = float(np.max(np.abs(ev_u.phase - target)))
    return flags, margins, res


def continuity_path(
    h1,
    u_hat: ScalarField,
    u_sub: ScalarField,
    g: BackgroundForm,
    S: AlmostHermitianStructure,
    opts: SolveOptions = None,
    path_opts: PathOptions = None,
    *,
    h0=None,
    start: ContinuityState = None,
    on_state=None,
):
    """Run the path to ``t = 1`` and return every accepted state.

    ``h1`` must be a hypercritical constant. ``h0``, when given, must equal
    the phase of ``u_hat``. ``start`` resumes from a saved state.
    ``on_state(index, state)`` is called for each accepted state.
    """
    opts = opts or SolveOptions()
    popts = path_opts or PathOptions()
    spec = u_hat.spec
    n = S.n
    h1_field = as_field(h1, spec)
    if float(np.ptp(h1_field.values)) != 0.0:
        raise DomainError("the continuity path supports constant targets only")
    h1 = float(h1_field.values.flat[0])
    if not hypercritical_floor(n) < h1 < n * math.pi / 2:
        raise DomainError(f"h1 = {h1} is not hypercritical")
    sup = check_supersolution(u_hat, h1, g, S)
    if not sup.is_supersolution:
        raise DomainError(f"u_hat is not a supersolution (min slack {sup.min_slack:.3e})")
    if not sup.hypercritical:
        raise DomainError("phase of u_hat is not hypercritical")
    theta0 = sup.theta0.values
    if h0 is not None:
        h0 = as_field(h0, spec)
        if float(np.max(np.abs(h0.values - theta0))) > 1e-12:
            raise DomainError("h0 differs from the phase of u_hat")
    sub = check_c_subsolution(u_sub, h1, g, S)
    if not sub.is_subsolution:
        raise DomainError(f"u_sub is not a C-subsolution for h1 (margin {sub.worst_margin:.3e})")

    states = []

    def accept(state):
        states.append(state)
        if on_state is not None:
            on_state(len(states) - 1, state)

    if start is None:
        u0 = u_hat.mean_zero()
        flags, margins, res = _inspect(0.0, u0, 0.0, theta0, h1, u_sub, g, S, popts)
        current = ContinuityState(0.0, u0, 0.0, 0, res, flags, margins)
    else:
        current = start
    if not current.ok:
        raise PathError("initial state violates path bounds", states, {"flags": current.flags, "margins": current.margins})
    accept(current)

    dt = popts.dt_init
    while current.t < 1.0:
        t_new = min(1.0, current.t + dt)
        target = (1.0 - t_new) * theta0 + t_new * h1
        try:
            u_new, c_new, report = solve(ScalarField(spec, target), current.u, current.c, g, S, opts, monitors=False)
        except DHYMError as exc:
            dt *= 0.5
            log.info("path step to t=%.6g failed (%s); dt -> %.3g", t_new, exc, dt)
            if dt < popts.dt_min:
                raise PathError(
                    f"step size underflow at t={current.t:.6g}: {exc}",
                    states,
                    {"t": current.t, "dt": dt, "last_error": str(exc)},
                ) from exc
            continue
        flags, margins, res = _inspect(t_new, u_new, c_new, theta0, h1, u_sub, g, S, popts)
        state = ContinuityState(t_new, u_new, c_new, report.iterations, res, flags, margins)
        if not state.ok:
            bad = [k for k, v in flags.items() if not v]
            raise PathError(
                f"path bound violated at t={t_new:.6g}: {bad}",
                states + [state],
                {"t": t_new, "c_t": c_new, "flags": flags, "margins": margins, "residual": res},
            )
        accept(state)
        current = state
        dt *= popts.dt_growth
    return states


def write_checkpoint(directory, index: int, state: ContinuityState) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"state_{index:05d}.field"
    flags = ",".join(k for k in FLAG_NAMES if state.flags.get(k))
    fileformat.write_field(
        path,
        state.u,
        "u_t",
        t=state.t,
        c_t=state.c,
        residual=state.residual,
        flags=flags,
        newton_iters=state.newton_iters,
    )
    manifest = directory / "manifest.json"
    entries = fileformat.read_record(manifest)["checkpoints"] if manifest.exists() else []
    entries = [e for e in entries if e["index"] != index]
    entries.append({"index": index, "file": path.name, "t": state.t, "c_t": state.c})
    entries.sort(key=lambda e: e["index"])
    fileformat.write_record(manifest, {"checkpoints": entries})
    return path


def read_checkpoints(manifest) -> list:
    """Load states listed in a path manifest, in order."""
    manifest = Path(manifest)
    entries = fileformat.read_record(manifest)["checkpoints"]
    states = []
    for entry in entries:
        u, header = fileformat.read_field(manifest.parent / entry["file"])
        names = set(filter(None, header.get("flags", "").split(",")))
        flags = {k: k in names for k in FLAG_NAMES}
        states.append(
            ContinuityState(
                float(header["t"]),
                u,
                float(header["c_t"]),
                int(header.get("newton_iters", 0)),
                float(header["residual"]),
                flags,
                {},
            )
        )
    return states
