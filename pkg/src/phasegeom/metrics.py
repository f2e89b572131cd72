"""Lorentzian metrics on a single 4-dimensional chart, signature (-+++)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import jet as J
from .fields import FieldProvider
from .scales import METRIC, ScaleDim


class DomainError(ValueError):
    """A coordinate point lies outside the chart on which the metric is defined."""


class SingularMetricError(ValueError):
    pass


@dataclass(frozen=True)
class Metric:
    """A metric ``g_{lm}(x)`` given by a jet-compatible component formula.

    ``ranges`` are the default sampling boxes for the four coordinates.
    """

    name: str
    formula: Callable[[object], object]
    params: Mapping[str, float] = field(default_factory=dict)
    ranges: tuple[tuple[float, float], ...] = ((-1, 1),) * 4
    domain: Callable[[np.ndarray], bool] = lambda x: True
    scale: ScaleDim = METRIC

    @property
    def provider(self) -> FieldProvider:
        return FieldProvider(4, self.formula, name=self.name)

    def check_domain(self, x) -> None:
        if not self.domain(np.asarray(J.value(x))):
            raise DomainError(f"{self.name}: point {np.asarray(J.value(x))} outside the chart")

    def components(self, x) -> np.ndarray:
        self.check_domain(x)
        return np.asarray(J.value(self.formula(np.asarray(x, dtype=float))))

    def jet(self, x: J.Jet) -> J.Jet:
        """Metric components as a jet in whatever variables ``x`` is seeded on."""
        self.check_domain(x)
        out = self.formula(x)
        if not isinstance(out, J.Jet):
            out = J.Jet.constant(out, x.nvars, x.order)
        return out


def inverse_metric(metric: Metric, x) -> np.ndarray:
    """``g^{lm}`` at ``x``."""
    g = metric.components(x)
    if abs(np.linalg.det(g)) < 1e-300:
        raise SingularMetricError(f"{metric.name}: singular metric at {x}")
    return np.linalg.inv(g)


def _diag(entries):
    """4x4 diagonal matrix from four scalars (floats or jets)."""
    zero = 0.0 * entries[1] if isinstance(entries[1], J.Jet) else 0.0
    rows = []
    for a in range(4):
        rows.append(J.stack([entries[a] if a == b else zero * 1.0 for b in range(4)]))
    return J.stack(rows)


def _scalar_like(x, value: float):
    """Constant with the jet structure of ``x[0]``."""
    return x[0] * 0.0 + value


def minkowski() -> Metric:
    def formula(x):
        if isinstance(x, J.Jet):
            return J.Jet.constant(np.diag([-1.0, 1.0, 1.0, 1.0]), x.nvars, x.order)
        return np.diag([-1.0, 1.0, 1.0, 1.0])

    return Metric("minkowski", formula, {}, ((-2, 2),) * 4)


def schwarzschild(r_s: float = 1.0) -> Metric:
    """Schwarzschild exterior in coordinates (t, r, theta, phi)."""
    r_s = float(r_s)

    def formula(x):
        r, th = x[1], x[2]
        f = 1.0 - r_s / r
        s = J.sin(th)
        return _diag([-1.0 * f, 1.0 / f, r * r, r * r * s * s])

    def domain(x):
        return bool(x[1] > r_s and 0.0 < x[2] < np.pi)

    ranges = ((-5.0, 5.0), (2.5 * r_s, 10.0 * r_s), (0.3, np.pi - 0.3), (0.0, 2 * np.pi))
    return Metric("schwarzschild", formula, {"r_s": r_s}, ranges, domain)


def wavy(eps: float = 0.1) -> Metric:
    """``diag(-1 - eps sin x1, 1, 1, 1 + eps cos x0)``."""
    eps = float(eps)

    def formula(x):
        one = _scalar_like(x, 1.0)
        return _diag([-1.0 - eps * J.sin(x[1]), one, one, 1.0 + eps * J.cos(x[0])])

    return Metric("wavy", formula, {"eps": eps}, ((-3, 3),) * 4)


def tilted(eps: float = 0.15) -> Metric:
    """A non-diagonal analytic metric with nonzero time-space couplings.

    Used for extra derivative coverage; every component depends on the
    coordinates.
    """
    eps = float(eps)

    def formula(x):
        t, a, b, z = x[0], x[1], x[2], x[3]
        g00 = -1.0 - eps * J.sin(a) * J.cos(b)
        g01 = eps * J.sin(z + t)
        g02 = 0.5 * eps * J.cos(a)
        g03 = 0.3 * eps * a * b
        g11 = 1.0 + eps * J.cos(t) * J.cos(t)
        g12 = 0.2 * eps * J.sin(z)
        g13 = 0.0 * t
        g22 = 1.0 + 0.5 * eps * J.sin(a + b)
        g23 = 0.25 * eps * J.cos(t + z)
        g33 = 1.0 + eps * a * a / (1.0 + a * a)
        rows = [
            [g00, g01, g02, g03],
            [g01, g11, g12, g13],
            [g02, g12, g22, g23],
            [g03, g13, g23, g33],
        ]
        return J.stack([J.stack(r) for r in rows])

    return Metric("tilted", formula, {"eps": eps}, ((-1.5, 1.5),) * 4)


CATALOG: dict[str, Callable[..., Metric]] = {
    "minkowski": minkowski,
    "schwarzschild": schwarzschild,
    "wavy": wavy,
    "tilted": tilted,
}


def build_metric(metric_id: str, params: Mapping[str, float] | None = None) -> Metric:
    try:
        factory = CATALOG[metric_id]
    except KeyError:
        raise KeyError(f"unknown metric {metric_id!r}; known: {sorted(CATALOG)}") from None
    return factory(**dict(params or {}))
