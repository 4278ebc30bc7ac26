"""Sub- and supersolution verification with reported margins."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import AlmostHermitianStructure, BackgroundForm
from .grid import ScalarField
from .phase import linearization_coeffs
from .solver import Linearization, _evaluate, as_field, hypercritical_floor


def _check_hypercritical(h: ScalarField, n: int):
    lo, hi = hypercritical_floor(n), n * math.pi / 2
    hmin, hmax = float(np.min(h.values)), float(np.max(h.values))
    if not (hmin > lo and hmax < hi):
        raise DomainError(
            f"h must lie in ({lo:.6g}, {hi:.6g}) pointwise; got range [{hmin:.6g}, {hmax:.6g}]"
        )


@dataclass(frozen=True)
class SubsolutionReport:
    is_subsolution: bool
    worst_margin: float
    worst_point: tuple
    per_j_margins: list

    def as_dict(self) -> dict:
        return asdict(self)


def subsolution_margins(lam: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``sum_{i != j} arctan(lam_i) - h + pi/2`` for every index ``j``."""
    angles = np.arctan(lam)
    total = np.sum(angles, axis=-1, keepdims=True)
    return (total - angles) - np.asarray(h)[..., None] + math.pi / 2


def check_c_subsolution(u_sub: ScalarField, h, g: BackgroundForm, S: AlmostHermitianStructure) -> SubsolutionReport:
    """Pointwise criterion for a C-subsolution; strict at every point and index."""
    h = as_field(h, u_sub.spec)
    _check_hypercritical(h, S.n)
    lam = _evaluate(u_sub.values, g, S).lam
    margins = subsolution_margins(lam, h.values)
    flat = int(np.argmin(margins))
    where = np.unravel_index(flat, margins.shape)
    point = tuple(int(i) for i in where[:-1])
    worst = float(margins[where])
    return SubsolutionReport(worst > 0.0, worst, point, [float(m) for m in margins[point]])


def check_c_subsolution_bruteforce(lambda_sub, h_val: float, box: float = 1e6, samples: int = 4000, seed: int = 0) -> bool:
    """Sampling test of boundedness of the constrained level set.

    Looks for points ``lam`` with ``sum arctan(lam) = h_val``,
    ``lam > lambda_sub`` componentwise and some coordinate in
    ``[box / 2, box]``. Returns True (bounded) when none is found.
    Free angles are sampled both uniformly and log-uniformly close to their
    lower limits, so thin feasible regions are still hit.
    """
    lam_sub = np.asarray(lambda_sub, dtype=float)
    n = lam_sub.size
    rng = np.random.default_rng(seed)
    lower = np.arctan(lam_sub)
    top = math.atan(box)
    for j in range(n):
        others = [i for i in range(n) if i != j]
        big = np.exp(rng.uniform(math.log(box / 2), math.log(box), samples))
        remaining = h_val - np.arctan(big)
        if len(others) == 1:
            last = others[0]
            free = []
        else:
            last = others[-1]
            free = others[:-1]
        for i in free:
            span = top - lower[i]
            uniform = rng.uniform(0.0, 1.0, samples)
            near = 10.0 ** rng.uniform(-12.0, 0.0, samples)
            frac = np.where(rng.uniform(size=samples) < 0.5, uniform, near)
            remaining = remaining - (lower[i] + frac * span)
        feasible = (remaining > lower[last]) & (remaining <= top) & (remaining < math.pi / 2)
        if np.any(feasible):
            return False
    return True


@dataclass(frozen=True, eq=False)
class SupersolutionReport:
    is_supersolution: bool
    min_slack: float
    hypercritical: bool
    theta0: ScalarField = field(repr=False)

    @property
    def theorem_hypotheses(self) -> bool:
        return self.is_supersolution and self.hypercritical

    def as_dict(self) -> dict:
        return {
            "is_supersolution": self.is_supersolution,
            "min_slack": self.min_slack,
            "hypercritical": self.hypercritical,
            "theta0_min": float(np.min(self.theta0.values)),
            "theta0_max": float(np.max(self.theta0.values)),
        }


def check_supersolution(u_hat: ScalarField, h, g: BackgroundForm, S: AlmostHermitianStructure) -> SupersolutionReport:
    """``phase(lambda(u_hat)) <= h`` pointwise, plus hypercriticality of that phase."""
    h = as_field(h, u_hat.spec)
    theta0 = ScalarField(u_hat.spec, _evaluate(u_hat.values, g, S).phase)
    slack = float(np.min(h.values - theta0.values))
    hyper = bool(np.min(theta0.values) > hypercritical_floor(S.n))
    return SupersolutionReport(bool(np.max(theta0.values - h.values) <= 0.0), slack, hyper, theta0)


@dataclass(frozen=True)
class DichotomyReport:
    theta: float
    branch_a_points: int
    branch_b_points: int
    neither_points: int
    trace_min: float
    details: list

    def as_dict(self) -> dict:
        return asdict(self)


def _dichotomy_data(u_sub, u, g, S):
    lin = Linearization(u, g, S)
    lu = lin.apply(u_sub.values - u.values)
    fprime = linearization_coeffs(lin.evaluation.lam)
    return lu, np.min(fprime, axis=-1), lin.trace


def check_dichotomy(u_sub: ScalarField, u: ScalarField, theta: float, h, g: BackgroundForm, S: AlmostHermitianStructure, max_details: int = 20, _data=None) -> DichotomyReport:
    """Classify points by which alternative of the subsolution dichotomy holds.

    Branch (a): ``L(u_sub - u) >= theta * sum F^{i ibar}``; branch (b):
    every ``F^{k kbar} >= theta * sum F^{i ibar}``. A point satisfying (a)
    is counted in (a) only.
    """
    if not theta > 0:
        raise DomainError("theta must be positive")
    lu, fmin, trace = _data if _data is not None else _dichotomy_data(u_sub, u, g, S)
    in_a = lu >= theta * trace
    in_b = ~in_a & (fmin >= theta * trace)
    neither = ~(in_a | in_b)
    details = []
    for flat in np.flatnonzero(neither)[:max_details]:
        idx = np.unravel_index(flat, neither.shape)
        details.append(
            {
                "point": [int(i) for i in idx],
                "L": float(lu[idx]),
                "min_F": float(fmin[idx]),
                "trace_F": float(trace[idx]),
            }
        )
    return DichotomyReport(
        float(theta),
        int(np.sum(in_a)),
        int(np.sum(in_b)),
        int(np.sum(neither)),
        float(np.min(trace)),
        details,
    )


def largest_dichotomy_theta(u_sub: ScalarField, u: ScalarField, h, g: BackgroundForm, S: AlmostHermitianStructure, rtol: float = 1e-6) -> float:
    """Bisection for the largest theta in (0, 1] with no point in neither branch.

    An empirical stand-in: the existence argument gives no formula for theta.
    """
    data = _dichotomy_data(u_sub, u, g, S)
    lo, hi = 0.0, 1.0
    if check_dichotomy(u_sub, u, hi, h, g, S, _data=data).neither_points == 0:
        return hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if check_dichotomy(u_sub, u, mid, h, g, S, _data=data).neither_points == 0:
            lo = mid
        else:
            hi = mid
    return lo
