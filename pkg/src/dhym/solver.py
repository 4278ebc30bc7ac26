"""Newton solver for ``sum_i arctan(lambda_i(u)) = h + c`` on the torus.

The unknowns are a potential ``u`` (kept in the mean-zero gauge) and a
constant ``c``. Each Newton step solves the bordered system

    L du - dc = -(phase(u) - h - c),     mean(du) = 0,

with GMRES, preconditioned by the exact inverse of the constant-coefficient
operator obtained by grid-averaging the coefficients of ``L``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import DomainError, LinearSolveError, NonConvergenceError, StateError, StepError
from .geometry import (
    AlmostHermitianStructure,
    BackgroundForm,
    _raw_hessian,
    contract_hessian,
    symmetrize,
)
from .grid import ScalarField, d1, dmix
from .phase import (
    linearization_coeffs,
    linearization_matrix,
    phase,
    relative_eigenvalues,
    relative_eigh,
)

log = logging.getLogger(__name__)

ELLIPTIC_FLOOR = 1e-14


@dataclass(frozen=True)
class SolveOptions:
    residual_tol: float = 1e-10
    max_newton_iters: int = 50
    linear_tol: float = 1e-12
    damping: float = 0.5
    min_step: float = 2.0 ** -20
    hypercritical_guard_margin: float = 1e-8
    linear_restart: int = 60
    linear_maxiter: int = 20

    def __post_init__(self):
        for name in ("residual_tol", "linear_tol", "min_step", "hypercritical_guard_margin"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 0 < self.damping < 1:
            raise DomainError("damping must lie in (0, 1)")
        if int(self.max_newton_iters) != self.max_newton_iters or self.max_newton_iters < 0:
            raise DomainError("max_newton_iters must be a non-negative integer")

    def as_dict(self) -> dict:
        return asdict(self)


def as_field(value, spec) -> ScalarField:
    if isinstance(value, ScalarField):
        if value.spec != spec:
            raise DomainError("field lives on a different grid")
        return value
    return ScalarField.constant(spec, float(value))


def hypercritical_floor(n: int) -> float:
    return (n - 1) * math.pi / 2


@dataclass
class _Evaluation:
    """Spectral data of ``omega_u`` on the whole grid."""

    lam: np.ndarray
    phase: np.ndarray
    vec: np.ndarray = None
    defect: float = 0.0


def _evaluate(u: np.ndarray, g: BackgroundForm, S: AlmostHermitianStructure, vectors=False) -> _Evaluation:
    hess, defect = symmetrize(_raw_hessian(u, S))
    gt = g.g + hess
    if vectors:
        lam, vec = relative_eigh(gt, S.chi)
    else:
        lam, vec = relative_eigenvalues(gt, S.chi), None
    return _Evaluation(lam, phase(lam), vec, defect)


def _check_shared(u: ScalarField, S: AlmostHermitianStructure):
    if u.spec != S.spec:
        raise DomainError(f"field grid {u.spec} does not match structure grid {S.spec}")


def spectrum_field(u: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure) -> np.ndarray:
    """Relative eigenvalues of ``omega_u`` at every point, shape ``grid + (n,)``."""
    _check_shared(u, S)
    return _evaluate(u.values, g, S).lam


def phase_field(u: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure) -> ScalarField:
    _check_shared(u, S)
    return ScalarField(u.spec, _evaluate(u.values, g, S).phase)


def residual(u: ScalarField, c: float, h, g: BackgroundForm, S: AlmostHermitianStructure) -> ScalarField:
    """``phase(lambda(u)) - h - c`` per point."""
    _check_shared(u, S)
    h = as_field(h, u.spec)
    return ScalarField(u.spec, _evaluate(u.values, g, S).phase - h.values - c)


class Linearization:
    """Matrix-free linearized operator ``L = F^{i jbar}(e_i ebar_j - [e_i, ebar_j]^{0,1})`` at ``u``.

    The frame contraction is folded into real coefficients of the
    coordinate stencils, so one application costs one pass of stencils.
    """

    def __init__(self, u: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure, evaluation=None):
        _check_shared(u, S)
        self.spec = u.spec
        self.S = S
        ev = evaluation if evaluation is not None and evaluation.vec is not None else _evaluate(u.values, g, S, True)
        self.evaluation = ev
        fprime = linearization_coeffs(ev.lam)
        self.min_fprime = float(np.min(fprime))
        if self.min_fprime < ELLIPTIC_FLOOR:
            raise StateError(f"linearization is not elliptic (min F' = {self.min_fprime:.3e})")
        fmat = linearization_matrix(ev.lam, ev.vec)
        self.trace = np.sum(fprime, axis=-1)
        self.second = {
            key: np.ascontiguousarray(np.real(np.sum(fmat * coef, axis=(-2, -1))))
            for key, coef in S.second_coeffs.items()
        }
        self.first = {
            key: np.ascontiguousarray(np.real(np.sum(fmat * coef, axis=(-2, -1))))
            for key, coef in S.first_coeffs.items()
        }
        self._symbol = None

    def apply(self, du: np.ndarray) -> np.ndarray:
        h = self.spec.spacing
        out = np.zeros(self.spec.shape)
        for (a, b), coef in self.second.items():
            out += coef * dmix(du, a, b, h)
        for b, coef in self.first.items():
            out += coef * d1(du, b, h)
        return out

    def __call__(self, du: ScalarField) -> ScalarField:
        return ScalarField(self.spec, self.apply(du.values))

    def _build_symbol(self):
        spec = self.spec
        h = spec.spacing
        npts = spec.points_per_axis
        ndim = spec.ndim
        angles = []
        for k in range(ndim):
            freqs = scipy.fft.rfftfreq(npts) if k == ndim - 1 else scipy.fft.fftfreq(npts)
            shape = [1] * ndim
            shape[k] = freqs.size
            angles.append((2 * math.pi * freqs).reshape(shape))
        symbol = 0.0
        for (a, b), coef in self.second.items():
            avg = float(np.mean(coef))
            if a == b:
                symbol = symbol + avg * (2.0 * np.cos(angles[a]) - 2.0) / (h * h)
            else:
                symbol = symbol - avg * np.sin(angles[a]) * np.sin(angles[b]) / (h * h)
        for b, coef in self.first.items():
            symbol = symbol + float(np.mean(coef)) * 1j * np.sin(angles[b]) / h
        symbol = np.broadcast_to(symbol, tuple(a.size for a in angles)).astype(complex)
        inv = np.zeros_like(symbol)
        mask = np.abs(symbol) > 1e-300
        mask.flat[0] = False
        inv[mask] = 1.0 / symbol[mask]
        self._symbol = inv

    def precondition(self, r: np.ndarray) -> np.ndarray:
        """Inverse of the averaged constant-coefficient operator on mean-zero data."""
        if self._symbol is None:
            self._build_symbol()
        spectrum = scipy.fft.rfftn(r)
        return scipy.fft.irfftn(spectrum * self._symbol, s=r.shape)


def apply_linearization(u: ScalarField, du: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure) -> ScalarField:
    """Apply the linearized operator at ``u`` to ``du``."""
    return Linearization(u, g, S)(du)


def solve_bordered(lin: Linearization, rhs: np.ndarray, opts: SolveOptions):
    """Find mean-zero ``du`` and ``dc`` with ``L du - dc = rhs``.

    Returns ``(du, dc, info)`` where info records iterations and the true
    relative residual of the bordered system.
    """
    shape = lin.spec.shape
    size = lin.spec.size

    def matvec(x):
        du = x[:size].reshape(shape)
        out = np.empty(size + 1)
        out[:size] = (lin.apply(du) - x[size]).ravel()
        out[size] = np.mean(du)
        return out

    def psolve(y):
        r = y[:size].reshape(shape)
        m = np.mean(r)
        out = np.empty(size + 1)
        out[:size] = (lin.precondition(r - m) + y[size]).ravel()
        out[size] = -m
        return out

    op = LinearOperator((size + 1, size + 1), matvec=matvec, dtype=float)
    pre = LinearOperator((size + 1, size + 1), matvec=psolve, dtype=float)
    b = np.zeros(size + 1)
    b[:size] = rhs.ravel()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(shape), 0.0, {"iterations": 0, "relative_residual": 0.0}
    count = [0]

    def callback(_):
        count[0] += 1

    x, code = gmres(
        op,
        b,
        rtol=opts.linear_tol,
        atol=0.0,
        restart=opts.linear_restart,
        maxiter=opts.linear_maxiter,
        M=pre,
        callback=callback,
        callback_type="pr_norm",
    )
    rel = float(np.linalg.norm(matvec(x) - b) / bnorm)
    info = {"iterations": count[0], "relative_residual": rel, "code": int(code)}
    if code != 0 and rel > 1e3 * opts.linear_tol:
        raise LinearSolveError(f"Krylov solve stagnated at relative residual {rel:.3e}")
    du = x[:size].reshape(shape)
    du = du - np.mean(du)
    return du, float(x[size]), info


def _guard_margin(ev: _Evaluation, n: int) -> float:
    return float(np.min(ev.phase) - hypercritical_floor(n))


def newton_step(u: ScalarField, c: float, h, g: BackgroundForm, S: AlmostHermitianStructure, opts: SolveOptions = None):
    """One damped Newton step in ``(u, c)``; returns ``(u', c', report)``."""
    opts = opts or SolveOptions()
    _check_shared(u, S)
    h = as_field(h, u.spec)
    n = S.n
    ev = _evaluate(u.values, g, S, vectors=True)
    res = ev.phase - h.values - c
    if not np.all(np.isfinite(res)):
        raise StepError("residual is not finite")
    margin = _guard_margin(ev, n)
    if margin < opts.hypercritical_guard_margin:
        raise StepError(
            f"state is not hypercritical (min phase margin {margin:.3e})",
            {"guard_margin": margin},
        )
    rnorm = float(np.max(np.abs(res)))
    lin = Linearization(u, g, S, evaluation=ev)
    du, dc, lin_info = solve_bordered(lin, -res, opts)
    alpha = 1.0
    tried = []
    while alpha >= opts.min_step:
        trial = u.values + alpha * du
        ctrial = c + alpha * dc
        ev_t = _evaluate(trial, g, S)
        margin_t = _guard_margin(ev_t, n)
        rnorm_t = float(np.max(np.abs(ev_t.phase - h.values - ctrial)))
        tried.append((alpha, rnorm_t, margin_t))
        if margin_t >= opts.hypercritical_guard_margin and rnorm_t < rnorm:
            report = {
                "step": alpha,
                "residual_before": rnorm,
                "residual_after": rnorm_t,
                "delta_c": dc,
                "delta_u_max": float(np.max(np.abs(du))),
                "guard_margin": margin_t,
                "linear": lin_info,
            }
            return ScalarField(u.spec, trial), ctrial, report
        alpha *= opts.damping
    raise StepError(
        "line search exhausted",
        {"residual": rnorm, "trials": tried[-5:], "linear": lin_info},
    )


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    c: float
    history: list = field(default_factory=list)
    snapshot: dict = None
    inequalities: dict = None

    def as_dict(self) -> dict:
        return asdict(self)


def solve(h, u0: ScalarField, c0: float, g: BackgroundForm, S: AlmostHermitianStructure, opts: SolveOptions = None, monitors=True):
    """Newton iteration to ``opts.residual_tol`` (max-norm).

    Returns ``(u, c, report)`` with ``u`` in the mean-zero gauge.
    """
    from . import monitors as mon

    opts = opts or SolveOptions()
    _check_shared(u0, S)
    h = as_field(h, u0.spec)
    u = u0.mean_zero()
    c = float(c0)
    history = []
    iterations = 0
    while True:
        rnorm = residual(u, c, h, g, S).max_norm()
        history.append({"iteration": iterations, "residual": rnorm, "c": c})
        log.debug("newton iteration %d residual %.3e c %.6g", iterations, rnorm, c)
        if rnorm <= opts.residual_tol:
            break
        if iterations >= opts.max_newton_iters:
            raise NonConvergenceError(
                f"no convergence after {iterations} Newton iterations (residual {rnorm:.3e})",
                history,
            )
        u, c, step = newton_step(u, c, h, g, S, opts)
        history[-1]["step"] = step
        iterations += 1
    report = SolveReport(True, iterations, rnorm, c, history)
    if monitors:
        snap = mon.snapshot(u, None, h, g, S)
        report.snapshot = snap.as_dict()
        report.inequalities = mon.check_eigenvalue_inequalities(snap, h.values + c)
    return u, c, report


def manufacture(u_star: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure) -> ScalarField:
    """Right-hand side ``h = phase(lambda(omega_{u*}))`` from the discrete operator."""
    _check_shared(u_star, S)
    ph = _evaluate(u_star.values, g, S).phase
    return _checked_target(ph, S)


def manufacture_exact(u_star, g: BackgroundForm, S: AlmostHermitianStructure) -> ScalarField:
    """Right-hand side from exact derivatives of an analytic potential.

    ``u_star`` provides ``derivatives(spec) -> (first, second)`` keyed by
    zero-based axis / axis pair (see :class:`dhym.analytic.AnalyticPotential`).
    """
    first, second = u_star.derivatives(S.spec)
    hess, _ = symmetrize(contract_hessian(first, second, S))
    if hess.shape[: S.spec.ndim] != S.spec.shape:
        hess = np.broadcast_to(hess, S.spec.shape + hess.shape[-2:])
    lam = relative_eigenvalues(g.g + hess, S.chi)
    return _checked_target(phase(lam), S)


def _checked_target(ph: np.ndarray, S: AlmostHermitianStructure) -> ScalarField:
    floor = hypercritical_floor(S.n)
    worst = int(np.argmin(ph))
    if not ph.flat[worst] > floor:
        point = tuple(int(i) for i in np.unravel_index(worst, ph.shape))
        raise DomainError(
            f"manufactured target is not hypercritical: phase {ph.flat[worst]:.6g} <= {floor:.6g} at {point}"
        )
    return ScalarField(S.spec, ph)
