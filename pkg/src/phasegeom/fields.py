"""Component fields over a coordinate chart with exact derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jet as J


def fd_step(x: float) -> float:
    """Step ``max(1, |x|) * eps^(1/3)`` used by every finite-difference check."""
    return max(1.0, abs(float(x))) * np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class FieldProvider:
    """A smooth component-valued field on a ``dim``-dimensional chart.

    ``fn`` maps a coordinate jet (shape ``(dim,)``) to a component jet and is
    written with the elementwise functions of :mod:`phasegeom.jet`, so value,
    first and second partials come out of a single forward pass.  Fields whose
    formula only supports first derivatives set ``max_order=1``; their
    second partials are central differences of the exact first partials.
    """

    dim: int
    fn: Callable[[J.Jet], J.Jet]
    max_order: int = 2
    name: str = "field"

    def jet(self, x, order: int = 2) -> J.Jet:
        order = min(order, self.max_order)
        out = self.fn(J.Jet.seed(np.asarray(x, dtype=float), order))
        if not isinstance(out, J.Jet):
            out = J.Jet.constant(out, self.dim, order)
        return out

    def eval(self, x) -> np.ndarray:
        return np.asarray(J.value(self.fn(np.asarray(x, dtype=float))))

    def d1(self, x, axis: int | None = None) -> np.ndarray:
        """First partials; the leading axis indexes the derivative direction."""
        grad = self.jet(x, order=1).grad
        return grad if axis is None else grad[axis]

    def d2(self, x, axis1: int | None = None, axis2: int | None = None) -> np.ndarray:
        if self.max_order >= 2:
            hess = self.jet(x, order=2).hess
        else:
            hess = self._d2_from_d1(np.asarray(x, dtype=float))
        if axis1 is None:
            return hess
        if axis2 is None:
            return hess[axis1]
        return hess[axis1, axis2]

    def _d2_from_d1(self, x: np.ndarray) -> np.ndarray:
        rows = []
        for a in range(self.dim):
            h = fd_step(x[a])
            e = np.zeros_like(x)
            e[a] = h
            rows.append((self.d1(x + e) - self.d1(x - e)) / (2 * h))
        return np.stack(rows)


def central_difference(f: Callable[[np.ndarray], np.ndarray], x, axis: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = fd_step(x[axis])
    e = np.zeros_like(x)
    e[axis] = h
    return (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)


def second_central_difference(f: Callable[[np.ndarray], np.ndarray], x, a: int, b: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    ha, hb = fd_step(x[a]) * 10, fd_step(x[b]) * 10
    ea = np.zeros_like(x)
    eb = np.zeros_like(x)
    ea[a] = ha
    eb[b] = hb
    return (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * ha * hb)


def relative_error(approx: np.ndarray, exact: np.ndarray, floor: float = 1.0) -> float:
    """Max absolute difference scaled by ``max(floor, max |exact|)``."""
    approx, exact = np.asarray(approx), np.asarray(exact)
    scale = max(floor, float(np.max(np.abs(exact))) if exact.size else 0.0)
    return float(np.max(np.abs(approx - exact))) / scale if exact.size else 0.0
