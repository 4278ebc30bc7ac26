"""Almost Hermitian structures on the torus given by a (1,0)-frame.

A structure is declared by frame coefficients ``A[i, a]`` with
``e_i = sum_a A[i, a] d/dx^a``: the frame fields span the (1,0) bundle, and
``chi[i, j] = chi(e_i, conj(e_j))`` fixes the Hermitian metric. Coefficient
arrays are stored broadcast-compressed: a grid axis has length 1 when the
coefficient does not vary along it. Trailing axes carry the components.

The complex Hessian in the frame is

    u_{i jbar} = e_i conj(e_j) u - [e_i, conj(e_j)]^{(0,1)} u,

which expands into a second-order part with coefficients
``A[i, a] conj(A[j, b])`` and a first-order part built from the frame
derivatives and the (0,1) bracket coefficients. Both are precomputed when
the structure is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileformat
from .errors import DomainError
from .grid import GridSpec, ScalarField, d1, iter_slabs, second_pairs, stencil_derivatives

PRESETS = ("flat", "twisted")
BRACKET_TOL = 1e-10


def _herm(a):
    return np.conj(np.swapaxes(a, -1, -2))


def flat_frame(n: int) -> np.ndarray:
    frame = np.zeros((n, 2 * n), dtype=complex)
    for k in range(n):
        frame[k, 2 * k] = 1.0 / math.sqrt(2.0)
        frame[k, 2 * k + 1] = -1j / math.sqrt(2.0)
    return frame


def frame_brackets(frame, dframe):
    """Vector components of ``[e_i, conj(e_j)]``, shape ``(..., n, n, 2n)``.

    ``dframe[..., g, i, a]`` is ``d/dx^g`` of ``frame[..., i, a]``.
    """
    forward = np.einsum("...ig,...gjb->...ijb", frame, np.conj(dframe))
    backward = np.einsum("...jg,...gib->...ijb", np.conj(frame), dframe)
    return forward - backward


def _frame_basis(frame):
    """Columns e_1..e_n, conj(e_1)..conj(e_n) as a ``(..., 2n, 2n)`` matrix."""
    return np.concatenate([np.swapaxes(frame, -1, -2), np.swapaxes(np.conj(frame), -1, -2)], axis=-1)


def project_brackets(frame, brackets):
    """Split bracket vectors into (1,0) and (0,1) frame components.

    Returns ``(b10, b01)`` with ``b01[..., i, j, k]`` the coefficient of
    ``conj(e_k)`` in ``[e_i, conj(e_j)]``. A rank-deficient frame falls back
    to a least-squares projection so that validation can report on it.
    """
    n = frame.shape[-2]
    basis = _frame_basis(frame)
    gshape = np.broadcast_shapes(basis.shape[:-2], brackets.shape[:-3])
    basis = np.broadcast_to(basis, gshape + basis.shape[-2:])
    rhs = np.broadcast_to(brackets, gshape + brackets.shape[-3:]).reshape(gshape + (n * n, 2 * n))
    rhs = np.swapaxes(rhs, -1, -2)
    try:
        coeffs = np.linalg.solve(basis, rhs)
    except np.linalg.LinAlgError:
        coeffs = np.linalg.pinv(basis) @ rhs
    coeffs = np.swapaxes(coeffs, -1, -2).reshape(gshape + (n, n, 2 * n))
    return coeffs[..., :n], coeffs[..., n:]


@dataclass(frozen=True, eq=False)
class AlmostHermitianStructure:
    """Frame, metric and bracket data of an almost Hermitian torus."""

    spec: GridSpec
    frame: np.ndarray = field(repr=False)
    dframe: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)
    bracket01: np.ndarray = field(repr=False)
    preset_id: str = "flat"
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.spec.n
        for name, tail in (
            ("frame", (n, 2 * n)),
            ("dframe", (2 * n, n, 2 * n)),
            ("chi", (n, n)),
            ("bracket01", (n, n, n)),
        ):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape[-len(tail):] != tail:
                raise DomainError(f"{name} must have trailing shape {tail}, got {arr.shape}")
            grid = arr.shape[: -len(tail)]
            if len(grid) != self.spec.ndim or any(g not in (1, self.spec.points_per_axis) for g in grid):
                raise DomainError(f"{name} has incompatible grid shape {grid}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        second, first = self._hessian_coefficients()
        object.__setattr__(self, "second_coeffs", second)
        object.__setattr__(self, "first_coeffs", first)

    def _hessian_coefficients(self):
        frame = self.frame
        outer = np.einsum("...ia,...jb->...ijab", frame, np.conj(frame))
        second = {}
        for a, b in second_pairs(self.spec.ndim):
            coef = outer[..., a, b] if a == b else outer[..., a, b] + outer[..., b, a]
            if np.any(coef != 0):
                second[(a, b)] = coef
        transport = np.einsum("...ig,...gjb->...ijb", frame, np.conj(self.dframe))
        correction = np.einsum("...ijk,...kb->...ijb", self.bracket01, np.conj(frame))
        full = transport - correction
        first = {}
        for b in range(self.spec.ndim):
            coef = full[..., b]
            if np.any(coef != 0):
                first[b] = coef
        return second, first

    @property
    def n(self) -> int:
        return self.spec.n

    def expanded(self, name: str) -> np.ndarray:
        arr = getattr(self, name)
        tail = arr.shape[self.spec.ndim:]
        return np.broadcast_to(arr, self.spec.shape + tail)

    def is_kahler_flat(self) -> bool:
        return not np.any(self.bracket01 != 0) and not np.any(self.dframe != 0)

    def real_frame_matrix(self) -> np.ndarray:
        """Columns ``Re e_1, Im e_1, ..., Re e_n, Im e_n``, shape ``(..., 2n, 2n)``."""
        cols = []
        for i in range(self.n):
            cols.append(self.frame[..., i, :].real)
            cols.append(self.frame[..., i, :].imag)
        return np.stack(cols, axis=-1)

    def real_metric(self) -> np.ndarray:
        """Riemannian metric ``g_ab`` in coordinates, induced by chi and the frame."""
        n = self.n
        basis = []
        for i in range(n):
            basis.append(math.sqrt(2.0) * self.frame[..., i, :].real)
            basis.append(-math.sqrt(2.0) * self.frame[..., i, :].imag)
        basis = np.stack(basis, axis=-1)
        p, q = self.chi.real, self.chi.imag
        gram = np.empty(self.chi.shape[:-2] + (2 * n, 2 * n))
        gram[..., 0::2, 0::2] = p
        gram[..., 1::2, 1::2] = p
        gram[..., 0::2, 1::2] = q
        gram[..., 1::2, 0::2] = -q
        inv = np.linalg.inv(basis)
        return np.swapaxes(inv, -1, -2) @ gram @ inv


@dataclass(frozen=True, eq=False)
class HermitianMatrixField:
    """An ``n x n`` Hermitian matrix per grid point, shape ``grid + (n, n)``.

    ``defect`` is the max-norm of the anti-Hermitian part removed when the
    field was symmetrized (zero for fields built exactly Hermitian).
    """

    spec: GridSpec
    values: np.ndarray = field(repr=False)
    defect: float = 0.0

    def __add__(self, other):
        if isinstance(other, HermitianMatrixField):
            return HermitianMatrixField(self.spec, self.values + other.values, max(self.defect, other.defect))
        return HermitianMatrixField(self.spec, self.values + other, self.defect)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class BackgroundForm:
    """The real (1,1)-form omega through its frame components ``g[i, j]``.

    ``g`` may be broadcast-compressed over the grid. When built from a
    potential, ``g = g0 + complex_hessian(v)``.
    """

    g: np.ndarray = field(repr=False)
    g0: np.ndarray = None
    potential: ScalarField = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=complex)
        if np.max(np.abs(g - _herm(g)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise DomainError("background form is not Hermitian")
        g = 0.5 * (g + _herm(g))
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @classmethod
    def multiple_of_chi(cls, S: AlmostHermitianStructure, a: float) -> "BackgroundForm":
        """omega = a * chi."""
        return cls(a * S.chi, g0=None)

    @classmethod
    def from_matrix(cls, S: AlmostHermitianStructure, g0) -> "BackgroundForm":
        g0 = np.asarray(g0, dtype=complex)
        return cls(np.broadcast_to(g0, (1,) * S.spec.ndim + g0.shape), g0=g0)

    @classmethod
    def from_potential(cls, S: AlmostHermitianStructure, g0, v: ScalarField) -> "BackgroundForm":
        g0 = np.asarray(g0, dtype=complex)
        return cls(g0 + complex_hessian(v, S).values, g0=g0, potential=v)


def _twisted_frame(spec: GridSpec, eps: float):
    n = spec.n
    base = flat_frame(n)
    x1 = spec.coordinate(1)[..., None, None]
    gshape = (spec.points_per_axis,) + (1,) * (spec.ndim - 1)
    frame = np.broadcast_to(base, gshape + base.shape).copy()
    frame[..., 1, :] = base[1] + eps * np.sin(x1[..., 0]) * base[0]
    dframe = np.zeros(gshape + (2 * n, n, 2 * n), dtype=complex)
    dframe[..., 0, 1, :] = eps * np.cos(x1[..., 0]) * base[0]
    return frame, dframe


def build_structure(preset_id: str, parameters=None, spec: GridSpec = None) -> AlmostHermitianStructure:
    """Build a preset structure.

    ``flat``: constant frame ``e_k = (d_{2k-1} - i d_{2k}) / sqrt(2)``,
    chi = identity (Kahler).
    ``twisted``: as flat except ``e_2 += epsilon * sin(x^1) * e_1``, chi is
    the identity in this frame; requires ``n >= 2`` and ``|epsilon| < 1/2``.
    """
    parameters = dict(parameters or {})
    if spec is None:
        raise DomainError("a GridSpec is required")
    n = spec.n
    ones = (1,) * spec.ndim
    if preset_id == "flat":
        unknown = set(parameters) - {"epsilon"}
        if unknown:
            raise DomainError(f"unknown parameters for flat preset: {sorted(unknown)}")
        frame = flat_frame(n).reshape(ones + (n, 2 * n))
        dframe = np.zeros(ones + (2 * n, n, 2 * n), dtype=complex)
    elif preset_id == "twisted":
        unknown = set(parameters) - {"epsilon"}
        if unknown:
            raise DomainError(f"unknown parameters for twisted preset: {sorted(unknown)}")
        eps = float(parameters.get("epsilon", 0.0))
        if not abs(eps) < 0.5:
            raise DomainError(f"twisted preset needs |epsilon| < 1/2, got {eps}")
        if n < 2:
            raise DomainError("twisted preset needs complex dimension n >= 2")
        frame, dframe = _twisted_frame(spec, eps)
        parameters["epsilon"] = eps
    else:
        raise DomainError(f"unknown preset {preset_id!r}; expected one of {PRESETS}")
    chi = np.eye(n, dtype=complex).reshape(ones + (n, n))
    _, b01 = project_brackets(frame, frame_brackets(frame, dframe))
    return AlmostHermitianStructure(spec, frame, dframe, chi, b01, preset_id, parameters)


def tabulated_structure(spec: GridSpec, frame, chi=None, dframe=None, preset_id="tabulated"):
    """Structure from tabulated frame coefficients.

    Frame derivatives default to the central-difference stencil.
    """
    n = spec.n
    frame = np.asarray(frame, dtype=complex)
    if dframe is None:
        full = np.broadcast_to(frame, spec.shape + (n, 2 * n))
        h = spec.spacing
        dframe = np.stack([d1(full, g, h) for g in range(spec.ndim)], axis=spec.ndim)
    if chi is None:
        chi = np.eye(n, dtype=complex).reshape((1,) * spec.ndim + (n, n))
    _, b01 = project_brackets(frame, frame_brackets(frame, dframe))
    return AlmostHermitianStructure(spec, frame, dframe, chi, b01, preset_id, {})


def _check_spec(u: ScalarField, S: AlmostHermitianStructure):
    if u.spec != S.spec:
        raise DomainError(f"field grid {u.spec} does not match structure grid {S.spec}")


def _rows(coef, rows):
    if rows is None or coef.shape[0] == 1:
        return coef
    return coef[rows]


def contract_hessian(first: dict, second: dict, S: AlmostHermitianStructure, rows=None) -> np.ndarray:
    """Assemble the (unsymmetrized) complex Hessian from coordinate derivatives.

    ``first[b]`` / ``second[(a, b)]`` hold du/dx^b and d2u/dx^a dx^b on the
    grid (or on grid rows ``rows`` along axis 0).
    """
    n = S.n
    out = None
    for key, coef in S.second_coeffs.items():
        term = second[key][..., None, None] * _rows(coef, rows)
        out = term if out is None else out + term
    for key, coef in S.first_coeffs.items():
        term = first[key][..., None, None] * _rows(coef, rows)
        out = term if out is None else out + term
    if out is None:
        shape = next(iter(second.values())).shape if second else S.spec.shape
        out = np.zeros(shape + (n, n), dtype=complex)
    return out


def _raw_hessian(values: np.ndarray, S: AlmostHermitianStructure, rows=None) -> np.ndarray:
    first, second = stencil_derivatives(
        values, S.spec.spacing, pairs=list(S.second_coeffs), firsts=list(S.first_coeffs)
    )
    if rows is not None:
        first = {k: v[1:-1] for k, v in first.items()}
        second = {k: v[1:-1] for k, v in second.items()}
    if not second and not first:
        shape = values.shape if rows is None else (values.shape[0] - 2,) + values.shape[1:]
        return np.zeros(shape + (S.n, S.n), dtype=complex)
    return contract_hessian(first, second, S, rows)


def symmetrize(h: np.ndarray):
    """Return ``((h + h^H) / 2, max-norm of the anti-Hermitian part)``."""
    anti = 0.5 * (h - _herm(h))
    return h - anti, float(np.max(np.abs(anti), initial=0.0))


def complex_hessian(u: ScalarField, S: AlmostHermitianStructure) -> HermitianMatrixField:
    """Stencil complex Hessian ``u_{i jbar}`` in the frame of ``S``, Hermitian-symmetrized."""
    _check_spec(u, S)
    values, defect = symmetrize(_raw_hessian(u.values, S))
    return HermitianMatrixField(S.spec, values, defect)


def iter_complex_hessian(u: ScalarField, S: AlmostHermitianStructure, max_points: int = 1 << 20):
    """Yield ``(rows, hessian_rows)`` slabs of the symmetrized complex Hessian."""
    _check_spec(u, S)
    for rows, padded in iter_slabs(u.values, max_points):
        yield rows, symmetrize(_raw_hessian(padded, S, rows))[0]


def omega_u(g: BackgroundForm, u: ScalarField, S: AlmostHermitianStructure) -> HermitianMatrixField:
    """Components of ``omega + ddbar u`` in the frame."""
    hess = complex_hessian(u, S)
    return HermitianMatrixField(S.spec, g.g + hess.values, hess.defect)


def validate_structure(S: AlmostHermitianStructure, frame_tol: float = 1e-12) -> dict:
    """Check frame independence, positivity of chi and bracket consistency."""
    dets = np.abs(np.linalg.det(S.real_frame_matrix()))
    min_det = float(np.min(dets))
    det_point = np.unravel_index(int(np.argmin(np.broadcast_to(dets, S.spec.shape))), S.spec.shape)
    chi_eigs = np.linalg.eigvalsh(S.chi)
    min_chi = float(np.min(chi_eigs))
    chi_defect = float(np.max(np.abs(S.chi - _herm(S.chi))))
    _, b01 = project_brackets(S.frame, frame_brackets(S.frame, S.dframe))
    residual = float(np.max(np.abs(b01 - S.bracket01), initial=0.0))
    if not np.isfinite(residual):
        residual = math.inf
    frame_ok = min_det > frame_tol
    checks = {
        "frame_independent": {"pass": bool(frame_ok), "min_abs_det": min_det, "worst_point": list(map(int, det_point))},
        "chi_positive_definite": {"pass": bool(min_chi > 0 and chi_defect <= 1e-12), "min_eigenvalue": min_chi},
        "bracket_consistent": {"pass": bool(frame_ok and residual <= BRACKET_TOL), "residual": residual},
    }
    if S.preset_id == "flat":
        flat_norm = float(np.max(np.abs(S.bracket01)))
        checks["flat_bracket_zero"] = {"pass": flat_norm == 0.0, "max_norm": flat_norm}
    return {
        "preset_id": S.preset_id,
        "parameters": dict(S.parameters),
        "pass": all(c["pass"] for c in checks.values()),
        "checks": checks,
    }


def _component_name(prefix, idx, part):
    return prefix + "".join(f"[{i + 1}]" for i in idx) + f".{part}"


def save_structure(S: AlmostHermitianStructure, directory) -> Path:
    """Write frame, chi and bracket01 components as field files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, arr in (("frame", S.frame), ("chi", S.chi), ("bracket01", S.bracket01)):
        full = S.expanded(name)
        tail = arr.shape[S.spec.ndim:]
        for idx in np.ndindex(*tail):
            comp = full[(Ellipsis,) + idx]
            for part, values in (("re", comp.real), ("im", comp.imag)):
                fname = _component_name(name, idx, part)
                fileformat.write_field(directory / f"{fname}.field", ScalarField(S.spec, values), fname)
    return directory


def load_structure(directory) -> AlmostHermitianStructure:
    """Read a tabulated structure written by :func:`save_structure`.

    Only frame (and chi, when present) are read; frame derivatives and the
    bracket are recomputed from the tabulated frame.
    """
    directory = Path(directory)
    probe = directory / f"{_component_name('frame', (0, 0), 're')}.field"
    if not probe.exists():
        raise DomainError(f"{directory}: no frame files found")
    spec = fileformat.read_field(probe)[0].spec
    n = spec.n

    def read_tensor(name, tail):
        out = np.zeros(spec.shape + tail, dtype=complex)
        for idx in np.ndindex(*tail):
            re = fileformat.read_field(directory / f"{_component_name(name, idx, 're')}.field")[0]
            im = fileformat.read_field(directory / f"{_component_name(name, idx, 'im')}.field")[0]
            if re.spec != spec or im.spec != spec:
                raise DomainError(f"{name} component {idx} has a different grid")
            out[(Ellipsis,) + idx] = re.values + 1j * im.values
        return out

    frame = read_tensor("frame", (n, 2 * n))
    chi = None
    if (directory / f"{_component_name('chi', (0, 0), 're')}.field").exists():
        chi = read_tensor("chi", (n, n))
    return tabulated_structure(spec, frame, chi=chi)
