"""Pointwise algebra of the Lagrangian phase operator ``sum_i arctan(lambda_i)``.

All functions act on the trailing axis (eigenvalue vectors) or trailing two
axes (matrices) and broadcast over any leading grid axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateArgumentError, DomainError
from .geometry import AlmostHermitianStructure, BackgroundForm, iter_complex_hessian
from .grid import ScalarField

CHI_MIN_EIG = 1e-12


def _herm(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _is_identity(chi) -> bool:
    n = chi.shape[-1]
    return bool(np.all(chi == np.eye(n)))


def _cholesky_inverse(chi):
    chi = np.asarray(chi, dtype=complex)
    min_eig = float(np.min(np.linalg.eigvalsh(chi)))
    if not min_eig > CHI_MIN_EIG:
        raise DomainError(f"chi is not positive definite (min eigenvalue {min_eig:.3e})")
    return np.linalg.inv(np.linalg.cholesky(chi))


def _reduce(gtilde, chi):
    """Standard Hermitian matrix of the pencil and the back-transform (or None)."""
    gtilde = np.asarray(gtilde, dtype=complex)
    if _is_identity(np.asarray(chi)):
        reduced = gtilde
        back = None
    else:
        inv = _cholesky_inverse(chi)
        reduced = inv @ gtilde @ _herm(inv)
        back = _herm(inv)
    return 0.5 * (reduced + _herm(reduced)), back


def relative_eigenvalues(gtilde, chi) -> np.ndarray:
    """Roots of ``det(gtilde - lambda chi) = 0``, sorted descending."""
    reduced, _ = _reduce(gtilde, chi)
    return np.linalg.eigvalsh(reduced)[..., ::-1]


def relative_eigh(gtilde, chi):
    """Eigenvalues (descending) and eigenvectors with ``V^H chi V = I``."""
    reduced, back = _reduce(gtilde, chi)
    lam, vec = np.linalg.eigh(reduced)
    lam = lam[..., ::-1]
    vec = vec[..., ::-1]
    if back is not None:
        vec = back @ vec
    return lam, vec


def phase(lam) -> np.ndarray:
    return np.sum(np.arctan(np.asarray(lam, dtype=float)), axis=-1)


def linearization_coeffs(lam) -> np.ndarray:
    """``F^{i ibar} = 1 / (1 + lambda_i^2)``."""
    lam = np.asarray(lam, dtype=float)
    return 1.0 / (1.0 + lam * lam)


def hessian_coeffs(lam):
    """Second derivatives of the phase in an eigenframe.

    Returns ``(diag, off)``: ``diag[i] = -2 l_i / (1 + l_i^2)^2`` and
    ``off[i, k] = -(l_i + l_k) / ((1 + l_i^2)(1 + l_k^2))``. The closed form
    for ``off`` is continuous across coincident eigenvalues and its diagonal
    equals ``diag``.
    """
    lam = np.asarray(lam, dtype=float)
    fp = linearization_coeffs(lam)
    diag = -2.0 * lam * fp * fp
    off = -(lam[..., :, None] + lam[..., None, :]) * fp[..., :, None] * fp[..., None, :]
    return diag, off


def linearization_matrix(lam, vec) -> np.ndarray:
    """``F^{i jbar} = dF / d gtilde[i, j]`` from an eigen-decomposition.

    ``vec`` must be normalized by ``V^H chi V = I``; then
    ``F = conj(V) diag(1 / (1 + lambda^2)) V^T``.
    """
    fp = linearization_coeffs(lam)
    return (np.conj(vec) * fp[..., None, :]) @ np.swapaxes(vec, -1, -2)


def second_derivative_form(lam, direction) -> np.ndarray:
    """Second derivative of the phase along a Hermitian direction.

    ``direction`` is expressed in the eigenframe (unitary for chi) in which
    ``gtilde = diag(lam)``.
    """
    diag, off = hessian_coeffs(lam)
    b = np.asarray(direction)
    bdiag = np.real(np.diagonal(b, axis1=-2, axis2=-1))
    n = b.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    offsum = np.sum(np.where(mask, off * np.abs(b) ** 2, 0.0), axis=(-2, -1))
    return np.sum(diag * bdiag * bdiag, axis=-1) + offsum


@dataclass(frozen=True)
class PhaseCones:
    """The cones Gamma_n, Gamma and Gamma^sigma in dimension ``n``."""

    n: int
    sigma: float

    def __post_init__(self):
        lo, hi = (self.n - 1) * math.pi / 2, self.n * math.pi / 2
        if not lo < self.sigma < hi:
            raise DomainError(f"sigma must lie in ({lo:.6g}, {hi:.6g}), got {self.sigma}")

    def membership(self, lam) -> dict:
        lam = np.asarray(lam, dtype=float)
        ph = phase(lam)
        margins = {
            "gamma_n": float(np.min(lam)),
            "gamma": float(ph - (self.n - 1) * math.pi / 2),
            "gamma_sigma": float(ph - self.sigma),
        }
        in_gamma = margins["gamma"] > 0
        return {
            "in_gamma_n": bool(margins["gamma_n"] > 0),
            "in_gamma": bool(in_gamma),
            "in_gamma_sigma": bool(in_gamma and margins["gamma_sigma"] > 0),
            "margins": margins,
        }


def cone_membership(lam, sigma: float) -> dict:
    lam = np.asarray(lam, dtype=float)
    return PhaseCones(lam.shape[-1], sigma).membership(lam)


def phase_properties_check(lam) -> dict:
    """Positivity of F', positivity of hypercritical eigenvalues, limit along rays."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    ph = float(phase(lam))
    fp = linearization_coeffs(lam)
    report = {"phase": ph}
    report["derivative_positive"] = "pass" if np.all(fp > 0) else "fail"
    if ph > (n - 1) * math.pi / 2:
        report["hypercritical_positive"] = "pass" if np.min(lam) > 0 else "fail"
    else:
        report["hypercritical_positive"] = "not-applicable"
    if np.min(lam) > 0:
        ts = (1.0, 10.0, 100.0, 1000.0)
        values = [float(phase(t * lam)) for t in ts]
        increasing = all(b > a for a, b in zip(values, values[1:]))
        bounded = all(v < n * math.pi / 2 for v in values)
        gaps = [n * math.pi / 2 - v for v in values]
        report["ray_limit"] = "pass" if increasing and bounded else "fail"
        report["ray_values"] = values
        report["ray_gaps"] = gaps
    else:
        report["ray_limit"] = "not-applicable"
    report["pass"] = all(
        report[k] != "fail" for k in ("derivative_positive", "hypercritical_positive", "ray_limit")
    )
    return report


@dataclass(frozen=True)
class HatTheta:
    """Global angle: principal argument and the branch-free average phase.

    ``principal`` is ``Arg`` of the grid average of ``prod_j (1 + i lambda_j)``
    in ``(-pi, pi]``; ``unwrapped`` is the grid average of
    ``sum_j arctan(lambda_j)``.
    """

    principal: float
    unwrapped: float
    modulus: float

    def __float__(self):
        return self.principal


def hat_theta(u: ScalarField, g: BackgroundForm, S: AlmostHermitianStructure, max_points: int = 1 << 20) -> HatTheta:
    """Angle of the averaged ``(chi + i omega_u)^n / chi^n``.

    Evaluated slab by slab so that fine grids fit in memory.
    """
    total = 0j
    phase_total = 0.0
    gvals = g.g
    for rows, hess in iter_complex_hessian(u, S, max_points):
        grows = gvals if gvals.shape[0] == 1 else gvals[rows]
        crows = S.chi if S.chi.shape[0] == 1 else S.chi[rows]
        lam = relative_eigenvalues(grows + hess, crows)
        total += np.sum(np.prod(1.0 + 1j * lam, axis=-1))
        phase_total += float(np.sum(phase(lam)))
    avg = total / u.spec.size
    if abs(avg) < 1e-12:
        raise DegenerateArgumentError(f"averaged complex quantity has modulus {abs(avg):.3e}")
    return HatTheta(float(np.angle(avg)), phase_total / u.spec.size, float(abs(avg)))
