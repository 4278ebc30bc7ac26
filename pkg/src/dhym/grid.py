"""Uniform periodic grids on the 2n-torus and second-order stencils.

Axes are numbered 1..2n in the public API, matching coordinates
``x^1, ..., x^{2n}``; array axis ``a - 1`` holds coordinate ``x^a``.
Grid point ``k`` along an axis sits at ``k * spacing``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import DomainError

PERIOD = 2.0 * math.pi
MIN_POINTS = 8


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid with the same number of points on each of 2n axes."""

    n: int
    points_per_axis: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"complex dimension must be an integer >= 1, got {self.n}")
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < MIN_POINTS:
            raise DomainError(
                f"points_per_axis must be an integer >= {MIN_POINTS}, got {self.points_per_axis}"
            )

    @property
    def period(self) -> float:
        return PERIOD

    @property
    def spacing(self) -> float:
        return PERIOD / self.points_per_axis

    @property
    def ndim(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.ndim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.ndim

    def check_axis(self, axis: int) -> int:
        if int(axis) != axis or not 1 <= axis <= self.ndim:
            raise DomainError(f"axis must be in [1, {self.ndim}], got {axis}")
        return int(axis) - 1

    def coordinate(self, axis: int) -> np.ndarray:
        """Coordinate ``x^axis`` as an array broadcastable against the grid."""
        k = self.check_axis(axis)
        shape = [1] * self.ndim
        shape[k] = self.points_per_axis
        return (np.arange(self.points_per_axis) * self.spacing).reshape(shape)

    def coordinates(self) -> list:
        return [self.coordinate(a) for a in range(1, self.ndim + 1)]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values on every point of a periodic grid.

    The values array is stored read-only; operations return new fields.
    """

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.spec.shape:
            values = np.broadcast_to(values, self.spec.shape)
        values = np.array(values, dtype=float, copy=True)
        if not np.all(np.isfinite(values)):
            raise DomainError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def from_function(cls, spec: GridSpec, func) -> "ScalarField":
        """Sample ``func(x1, ..., x2n)`` on the grid (arguments broadcast)."""
        return cls(spec, func(*spec.coordinates()))

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.spec != self.spec:
                raise DomainError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.spec, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.spec, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.spec, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.spec, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.spec, -self.values)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean_zero(self) -> "ScalarField":
        return ScalarField(self.spec, self.values - mean(self))


# raw-array stencils; ``k`` is a zero-based array axis


def d1(a: np.ndarray, k: int, h: float) -> np.ndarray:
    return (np.roll(a, -1, k) - np.roll(a, 1, k)) / (2.0 * h)


def d2(a: np.ndarray, k: int, h: float) -> np.ndarray:
    return ((np.roll(a, -1, k) + np.roll(a, 1, k)) - 2.0 * a) / (h * h)


def dmix(a: np.ndarray, k: int, m: int, h: float) -> np.ndarray:
    """Four-point cross stencil for the mixed partial; symmetric in (k, m)."""
    if k == m:
        return d2(a, k, h)
    k, m = min(k, m), max(k, m)
    ap = np.roll(a, -1, k)
    am = np.roll(a, 1, k)
    return (np.roll(ap, -1, m) - np.roll(ap, 1, m) - np.roll(am, -1, m) + np.roll(am, 1, m)) / (
        4.0 * h * h
    )


def second_pairs(ndim: int) -> list:
    """Unordered axis pairs (k <= m), the index set of a symmetric Hessian."""
    return list(combinations_with_replacement(range(ndim), 2))


def stencil_derivatives(a: np.ndarray, h: float, pairs=None, firsts=None):
    """All requested first and second derivatives of a raw array.

    Returns ``(first, second)`` dicts keyed by zero-based axis / axis pair.
    """
    ndim = a.ndim
    pairs = second_pairs(ndim) if pairs is None else pairs
    firsts = range(ndim) if firsts is None else firsts
    first = {k: d1(a, k, h) for k in firsts}
    second = {(k, m): dmix(a, k, m, h) for k, m in pairs}
    return first, second


def iter_slabs(a: np.ndarray, max_points: int = 1 << 20):
    """Yield ``(rows, padded)`` slabs along axis 0 with a one-row periodic halo.

    Stencils evaluated on ``padded`` are exact on ``padded[1:-1]``, which
    corresponds to grid rows ``rows``.
    """
    nrows = a.shape[0]
    per_row = a.size // nrows
    step = max(1, min(nrows, max_points // max(per_row, 1)))
    for start in range(0, nrows, step):
        stop = min(nrows, start + step)
        idx = np.arange(start - 1, stop + 1)
        yield slice(start, stop), np.take(a, idx, axis=0, mode="wrap")


def diff(f: ScalarField, axis: int, order: int = 1) -> ScalarField:
    """Central difference of ``f`` along ``axis`` (1-based) with periodic wrap."""
    k = f.spec.check_axis(axis)
    if order == 1:
        return ScalarField(f.spec, d1(f.values, k, f.spec.spacing))
    if order == 2:
        return ScalarField(f.spec, d2(f.values, k, f.spec.spacing))
    raise DomainError(f"order must be 1 or 2, got {order}")


def mixed_diff(f: ScalarField, axis_a: int, axis_b: int) -> ScalarField:
    k = f.spec.check_axis(axis_a)
    m = f.spec.check_axis(axis_b)
    return ScalarField(f.spec, dmix(f.values, k, m, f.spec.spacing))


def mean(f: ScalarField) -> float:
    """Uniform-weight average; the grid volume is normalized to one."""
    return float(np.mean(f.values))


def gradient(f: ScalarField) -> np.ndarray:
    """Stencil gradient, shape ``grid + (2n,)``."""
    h = f.spec.spacing
    return np.stack([d1(f.values, k, h) for k in range(f.spec.ndim)], axis=-1)


def real_hessian(f: ScalarField) -> np.ndarray:
    """Symmetric stencil Hessian, shape ``grid + (2n, 2n)``."""
    ndim = f.spec.ndim
    out = np.empty(f.spec.shape + (ndim, ndim))
    for k, m in second_pairs(ndim):
        out[..., k, m] = out[..., m, k] = dmix(f.values, k, m, f.spec.spacing)
    return out


def generalized_eigvalsh(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched eigenvalues of the symmetric pencil ``(a, b)``, ascending.

    ``b`` must be positive definite; it may be broadcast-compressed.
    """
    lower = np.linalg.cholesky(b)
    inv = np.linalg.inv(lower)
    reduced = inv @ a @ np.conj(np.swapaxes(inv, -1, -2))
    reduced = 0.5 * (reduced + np.conj(np.swapaxes(reduced, -1, -2)))
    return np.linalg.eigvalsh(reduced)


def real_hessian_eigen_max(u: ScalarField, metric=None) -> ScalarField:
    """Largest eigenvalue of the stencil Hessian relative to a real metric.

    ``metric`` is a symmetric positive definite ``(2n, 2n)`` matrix, or an
    array of them broadcastable against the grid; ``None`` means Euclidean.
    """
    ndim = u.spec.ndim
    metric = np.eye(ndim) if metric is None else np.asarray(metric, dtype=float)
    if metric.shape[-2:] != (ndim, ndim):
        raise DomainError(f"metric must have trailing shape ({ndim}, {ndim})")
    if np.min(np.linalg.eigvalsh(metric)) <= 0.0:
        raise DomainError("metric is not positive definite")
    hess = real_hessian(u)
    if metric.ndim == 2 and np.array_equal(metric, np.eye(ndim)):
        mu = np.linalg.eigvalsh(hess)
    else:
        mu = generalized_eigvalsh(hess, metric)
    return ScalarField(u.spec, mu[..., -1])
