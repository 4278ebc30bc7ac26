"""Runtime diagnostics for the quantities the a priori estimates control.

A snapshot records the zero-, first- and second-order quantities (C^0 size,
gradient, largest real Hessian eigenvalue) together with eigenvalue bounds
that must hold on any hypercritical state.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import AlmostHermitianStructure, BackgroundForm
from .grid import ScalarField, gradient, real_hessian_eigen_max
from .phase import linearization_coeffs, phase, relative_eigh, second_derivative_form
from .solver import _evaluate, as_field, hypercritical_floor

INEQUALITY_TOL = 1e-8
CONCAVITY_TOL = 1e-12

SERIES_COLUMNS = (
    "t",
    "c_t",
    "residual",
    "c0",
    "grad_sup",
    "mu1_sup",
    "lambda_min",
    "lambda_product_min",
    "phase_min",
    "phase_max",
    "trace_F_min",
)


@dataclass(frozen=True)
class EstimateSnapshot:
    """Estimate quantities of one state.

    ``c0_sub`` is ``sup|u - u_sub|`` and ``c0`` is ``sup|u|``, both under
    the normalization ``sup(u - u_sub) = 0``. ``lambda_product_min`` is
    ``min(lambda_{n-1} * lambda_n)`` (None when n = 1).
    """

    n: int
    c0_sub: float
    c0: float
    grad_sup: float
    mu1_sup: float
    lambda_min: float
    lambda_product_min: float
    phase_min: float
    phase_max: float
    trace_F_min: float
    h_min: float = None

    def as_dict(self) -> dict:
        return asdict(self)


def snapshot(u: ScalarField, u_sub, h, g: BackgroundForm, S: AlmostHermitianStructure) -> EstimateSnapshot:
    u_sub = as_field(0.0 if u_sub is None else u_sub, u.spec)
    diff = u.values - u_sub.values
    shift = np.max(diff)
    c0_sub = float(shift - np.min(diff))
    c0 = float(np.max(np.abs(u.values - shift)))

    metric = S.real_metric()
    grad = gradient(u)
    inv_metric = np.linalg.inv(metric)
    grad_sq = np.einsum("...a,...ab,...b->...", grad, inv_metric, grad)
    mu1 = real_hessian_eigen_max(u, metric)

    ev = _evaluate(u.values, g, S)
    lam = ev.lam
    trace = np.sum(linearization_coeffs(lam), axis=-1)
    product = float(np.min(lam[..., -2] * lam[..., -1])) if S.n >= 2 else None
    h_min = None if h is None else float(np.min(as_field(h, u.spec).values))
    return EstimateSnapshot(
        n=S.n,
        c0_sub=c0_sub,
        c0=c0,
        grad_sup=float(math.sqrt(max(float(np.max(grad_sq)), 0.0))),
        mu1_sup=float(np.max(mu1.values)),
        lambda_min=float(np.min(lam[..., -1])),
        lambda_product_min=product,
        phase_min=float(np.min(ev.phase)),
        phase_max=float(np.max(ev.phase)),
        trace_F_min=float(np.min(trace)),
        h_min=h_min,
    )


def check_eigenvalue_inequalities(snap: EstimateSnapshot, h, tol: float = INEQUALITY_TOL) -> dict:
    """``lambda_j lambda_n >= 1`` and ``lambda_n >= tan(inf h - (n-1) pi / 2)``.

    ``h`` is the phase target actually solved for (for a solution of
    ``phase = h + c`` pass ``h + c``).
    """
    n = snap.n
    floor = hypercritical_floor(n)
    h_inf = float(np.min(h))
    if not snap.phase_min > floor or not h_inf > floor:
        return {"applicable": False, "pass": True, "reason": "state or target is not hypercritical"}
    bound = math.tan(h_inf - floor)
    report = {"applicable": True, "lower_bound": bound, "lambda_min": snap.lambda_min}
    report["lower_bound_margin"] = snap.lambda_min - bound
    report["lower_bound_pass"] = bool(snap.lambda_min >= bound - tol)
    if n >= 2:
        report["product_margin"] = snap.lambda_product_min - 1.0
        report["product_pass"] = bool(snap.lambda_product_min >= 1.0 - tol)
    else:
        report["product_pass"] = True
    report["positive_pass"] = bool(snap.lambda_min > 0)
    report["pass"] = report["lower_bound_pass"] and report["product_pass"] and report["positive_pass"]
    return report


def random_hermitian(rng, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def check_concavity_at_state(u: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure, trials: int = 100, seed: int = 0) -> dict:
    """Sign of the second derivative of the phase at random grid points.

    Each trial draws a grid point and a random Hermitian direction in the
    eigenframe there; the quadratic form must be <= 1e-12.
    """
    rng = np.random.default_rng(seed)
    ev = _evaluate(u.values, g, S)
    floor = hypercritical_floor(S.n)
    worst = -math.inf
    failures = []
    for k in range(trials):
        idx = tuple(int(i) for i in rng.integers(0, u.spec.points_per_axis, size=u.spec.ndim))
        lam = ev.lam[idx]
        direction = random_hermitian(rng, S.n)
        value = float(second_derivative_form(lam, direction))
        worst = max(worst, value)
        if value > CONCAVITY_TOL:
            failures.append({"point": list(idx), "value": value, "phase": float(phase(lam))})
    return {
        "trials": trials,
        "hypercritical": bool(np.min(ev.phase) > floor),
        "max_form_value": worst,
        "failures": failures,
        "pass": not failures,
    }


def second_derivative_at_point(gtilde: np.ndarray, chi: np.ndarray, direction: np.ndarray) -> float:
    """Quadratic form of a direction given in the original frame at one point."""
    lam, vec = relative_eigh(gtilde, chi)
    rotated = vec.conj().T @ direction @ vec
    return float(second_derivative_form(lam, rotated))


def track_path(states, h1, theta0, g=None, S=None, u_sub=None, tol: float = INEQUALITY_TOL, target_tol: float = 1e-10) -> dict:
    """Check the constant window and the hypercritical target along a path.

    With ``g`` and ``S`` supplied, the returned series also carries the
    snapshot quantities of every state.
    """
    theta0 = np.asarray(getattr(theta0, "values", theta0), dtype=float)
    h1 = float(np.max(getattr(h1, "values", h1)))
    sup_gap = float(np.max(h1 - theta0))
    inf_theta0 = float(np.min(theta0))
    rows = []
    violations = []
    for k, st in enumerate(states):
        t, c = float(st.t), float(st.c)
        target_min = float(np.min((1 - t) * theta0 + t * h1)) + c
        checks = {
            "c_upper": c <= tol,
            "c_lower": c >= -t * sup_gap - tol,
            "target_hypercritical": target_min >= inf_theta0 - target_tol,
        }
        for name, ok in checks.items():
            if not ok:
                violations.append({"index": k, "t": t, "check": name, "c_t": c, "target_min": target_min})
        row = {"t": t, "c_t": c, "residual": float(st.residual)}
        if g is not None and S is not None:
            snap = snapshot(st.u, u_sub, None, g, S)
            row.update(
                c0=snap.c0,
                grad_sup=snap.grad_sup,
                mu1_sup=snap.mu1_sup,
                lambda_min=snap.lambda_min,
                lambda_product_min=snap.lambda_product_min if snap.lambda_product_min is not None else math.nan,
                phase_min=snap.phase_min,
                phase_max=snap.phase_max,
                trace_F_min=snap.trace_F_min,
            )
        rows.append(row)
    return {"pass": not violations, "violations": violations, "series": rows}
