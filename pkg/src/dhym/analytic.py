"""Closed-form potentials with exact derivatives (manufactured solutions)."""
from __future__ import annotations

import sympy as sp
import numpy as np

from .errors import DomainError
from .grid import GridSpec, ScalarField, second_pairs


class AnalyticPotential:
    """A smooth periodic function of ``x1, ..., x2n`` given as an expression.

    >>> u = AnalyticPotential("0.05*cos(x1) + 0.03*sin(x2 + x4)", n=2)
    """

    def __init__(self, expr, n: int):
        self.n = n
        self.symbols = sp.symbols(" ".join(f"x{a}" for a in range(1, 2 * n + 1)))
        if not isinstance(self.symbols, tuple):
            self.symbols = (self.symbols,)
        names = {str(s): s for s in self.symbols}
        try:
            self.expr = sp.sympify(expr, locals=names) if isinstance(expr, str) else sp.sympify(expr)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise DomainError(f"cannot parse potential {expr!r}") from exc
        stray = self.expr.free_symbols - set(self.symbols)
        if stray:
            raise DomainError(f"potential uses unknown symbols {sorted(map(str, stray))}")

    def __repr__(self):
        return f"AnalyticPotential({str(self.expr)!r}, n={self.n})"

    def _eval(self, expr, spec: GridSpec) -> np.ndarray:
        func = sp.lambdify(self.symbols, expr, "numpy")
        return np.broadcast_to(np.asarray(func(*spec.coordinates()), dtype=float), spec.shape)

    def field(self, spec: GridSpec) -> ScalarField:
        self._check(spec)
        return ScalarField(spec, self._eval(self.expr, spec))

    def derivatives(self, spec: GridSpec):
        """Exact ``(first, second)`` derivative arrays on the grid."""
        self._check(spec)
        first = {k: self._eval(sp.diff(self.expr, s), spec) for k, s in enumerate(self.symbols)}
        second = {
            (a, b): self._eval(sp.diff(self.expr, self.symbols[a], self.symbols[b]), spec)
            for a, b in second_pairs(spec.ndim)
        }
        return first, second

    def _check(self, spec: GridSpec):
        if spec.n != self.n:
            raise DomainError(f"potential is for n={self.n}, grid has n={spec.n}")
