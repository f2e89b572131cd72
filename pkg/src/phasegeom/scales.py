"""Scale dimensions: rational exponents over time, length and mass."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(1000)


@dataclass(frozen=True)
class ScaleDim:
    """Physical dimension ``T^t L^l M^m`` with rational exponents."""

    t_exp: Fraction = Fraction(0)
    l_exp: Fraction = Fraction(0)
    m_exp: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "t_exp", _frac(self.t_exp))
        object.__setattr__(self, "l_exp", _frac(self.l_exp))
        object.__setattr__(self, "m_exp", _frac(self.m_exp))

    def __add__(self, other: "ScaleDim") -> "ScaleDim":
        return ScaleDim(self.t_exp + other.t_exp, self.l_exp + other.l_exp, self.m_exp + other.m_exp)

    def __neg__(self) -> "ScaleDim":
        return ScaleDim(-self.t_exp, -self.l_exp, -self.m_exp)

    def __sub__(self, other: "ScaleDim") -> "ScaleDim":
        return self + (-other)

    def __mul__(self, k) -> "ScaleDim":
        k = _frac(k)
        return ScaleDim(self.t_exp * k, self.l_exp * k, self.m_exp * k)

    __rmul__ = __mul__

    @property
    def is_dimensionless(self) -> bool:
        return self == DIMENSIONLESS

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.t_exp, self.l_exp, self.m_exp)

    def __str__(self) -> str:
        return f"T^{self.t_exp} L^{self.l_exp} M^{self.m_exp}"


class ScaleMismatch(ValueError):
    """Two quantities with different scale dimensions were combined additively."""


def require_same(a: ScaleDim, b: ScaleDim, what: str = "operands") -> ScaleDim:
    if a != b:
        raise ScaleMismatch(f"{what}: {a} is not {b}")
    return a


DIMENSIONLESS = ScaleDim()
TIME = ScaleDim(1, 0, 0)
LENGTH = ScaleDim(0, 1, 0)
MASS = ScaleDim(0, 0, 1)

SPEED_OF_LIGHT = ScaleDim(-1, 1, 0)
PLANCK = ScaleDim(-1, 2, 1)
PARTICLE_MASS = MASS
CHARGE = ScaleDim(-1, Fraction(3, 2), Fraction(1, 2))
METRIC = ScaleDim(0, 2, 0)
INVERSE_METRIC = -METRIC

# Scale dimensions of the derived objects (the velocity fibre coordinates are
# treated as dimensionless, so every scale factor is carried by the tags).
TIME_FORM = TIME
CONTACT_MAP = -TIME
PHASE_FORM = ScaleDim(-1, 2, 0)          # Omega: T^-1 L^2
PHASE_BIVECTOR = ScaleDim(1, -2, 0)      # Lambda: T L^-2
DYNAMICAL_CONNECTION = -TIME             # gamma
SIGMA_TENSOR = ScaleDim(-1, 2, 0)
EM_FIELD = ScaleDim(0, Fraction(1, 2), Fraction(1, 2))


def monomial(*, c: float = 1.0, hbar: float = 1.0, mass: float = 1.0,
             c_exp=0, hbar_exp=0, m_exp=0) -> float:
    """Numeric value of ``c^c_exp hbar^hbar_exp m^m_exp``."""
    return float(c) ** float(c_exp) * float(hbar) ** float(hbar_exp) * float(mass) ** float(m_exp)


def monomial_dimension(c_exp=0, hbar_exp=0, m_exp=0) -> ScaleDim:
    """Scale dimension of ``c^c_exp hbar^hbar_exp m^m_exp``."""
    return SPEED_OF_LIGHT * c_exp + PLANCK * hbar_exp + PARTICLE_MASS * m_exp

# Volume coefficients of -c^2 tau ^ Omega^3 and -(1/c^2) gamma ^ Lambda^3.
COVARIANT_VOLUME = TIME_FORM + 3 * PHASE_FORM + 2 * SPEED_OF_LIGHT
CONTRAVARIANT_VOLUME = DYNAMICAL_CONNECTION + 3 * PHASE_BIVECTOR - 2 * SPEED_OF_LIGHT


def c_power(dim: ScaleDim) -> Fraction:
    """Exponent of ``c`` carried by a quantity at fixed coordinates and metric.

    With the metric and the coordinates held fixed the only time-scale
    bearer is ``c``, so a quantity of dimension ``T^t ...`` scales as ``c^-t``.
    """
    return -dim.t_exp
