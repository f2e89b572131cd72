"""Non-metric phase connections ``Gamma = Gamma[g] + Sigma`` and the electromagnetic structure.

Conventions.  A vertical valued 1-form ``Sigma`` has coefficients
``Sigma_l^i`` (shape ``(4, 3)``).  Its lowered avatar is
``sbar_{lm} = c alpha g-bar_{im} Sigma_l^i`` and ``alt S`` denotes the 2-form
``S_{lm} d^l ^ d^m`` whose full components are ``S - S^T``.  A (0,2) tensor
``omega`` is passed as its coefficient array; its antisymmetric part ``phi``
enters ``Omega`` with full components equal to ``phi`` itself, which is the
2-form written ``1/2 phi`` when ``phi`` is read as ``phi_{lm} d^l ^ d^m``
with doubled coefficients.  The electromagnetic case therefore uses
``omega = (1/2)(q/m) F`` so that ``Omega_em = Omega[g] + (1/2)(q/m) F`` in
full components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import jet as J
from .kinematics import PhasePoint, PhaseQuantities, check_admissible
from .metrics import Metric
from .spacetime import levi_civita
from .structures import (
    DIM,
    E_X,
    VOLUME_INDEX,
    PhaseConnection,
    PhaseStructures,
    chi,
    classify_phase_structure,
)
from .tensor import expand_wedge, exterior_derivative, wedge_component


class ClosednessError(ValueError):
    """An electromagnetic 2-form is not closed at a sampled point."""


class SymmetryError(ValueError):
    """A sigma tensor violates its declared symmetry."""


def _mx(a) -> float:
    a = np.asarray(J.value(a))
    return float(np.max(np.abs(a))) if a.size else 0.0


def horizontal_form(S) -> np.ndarray:
    """Full 7-dim components of ``S_{lm} d^l ^ d^m``."""
    S = np.asarray(J.value(S))
    out = np.zeros((DIM, DIM))
    out[:4, :4] = S - S.T
    return out


def vertical_bivector(N) -> np.ndarray:
    """Full 7-dim components of ``N^{ij} d0_i ^ d0_j``."""
    N = np.asarray(J.value(N))
    out = np.zeros((DIM, DIM))
    out[4:, 4:] = N - N.T
    return out


# -- sigma tensors ----------------------------------------------------------------------

KINDS = ("general", "symmetric", "antisymmetric")


@dataclass(frozen=True)
class SigmaTensor:
    """A phase dependent (0,2) tensor ``sigma_{lm}``.

    ``formula(z, q)`` receives the phase coordinates (array or jet) and the
    matching :class:`PhaseQuantities`; ``kind`` is validated on evaluation.
    """

    name: str
    formula: Callable[[object, PhaseQuantities], object]
    kind: str = "general"
    symmetry_tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sigma kind {self.kind!r}")

    def evaluate(self, z, q: PhaseQuantities):
        out = self.formula(z, q)
        if self.kind != "general":
            v = np.asarray(J.value(out))
            sign = 1.0 if self.kind == "symmetric" else -1.0
            defect = _mx(v - sign * v.T)
            if defect > self.symmetry_tol * max(_mx(v), 1.0):
                raise SymmetryError(f"{self.name}: declared {self.kind} but defect is {defect:.3e}")
        return out


def sigma_to_Sigma(sigma: SigmaTensor, metric: Metric, c: float = 1.0) -> PhaseConnection:
    """``Sigma_l^i = (1/(c alpha)) g-bar^{ir} sigma_{lr}``."""

    def formula(z):
        q = PhaseQuantities(metric, z, c)
        s = sigma.evaluate(z, q)
        return J.einsum("ir,lr->li", q.gbar_upi, s) * J.reciprocal(q.alpha) * (1.0 / c)

    return PhaseConnection(f"Sigma[{sigma.name}]", formula)


def connection_from_sigma(metric: Metric, sigma: SigmaTensor, c: float = 1.0) -> PhaseConnection:
    """``Gamma[g, sigma] = chi(K[g]) + Sigma[g, sigma]``."""
    return chi(levi_civita(metric)).plus(sigma_to_Sigma(sigma, metric, c), f"Gamma[g,{sigma.name}]")


def split_connection(gam: PhaseConnection, metric: Metric) -> tuple[PhaseConnection, PhaseConnection]:
    """``(Gamma[g], Sigma)`` with ``Sigma = Gamma - Gamma[g]``."""
    base = chi(levi_civita(metric))

    def formula(z):
        return gam.jet(z) - base.jet(z)

    return base, PhaseConnection(f"{gam.name}-Gamma[g]", formula, max(gam.loss, base.loss))


def sigma_bar(Sigma, metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    """``sbar_{lm} = c alpha g-bar_{im} Sigma_l^i`` from coefficients ``Sigma`` at ``p``."""
    check_admissible(metric, p)
    q = PhaseQuantities(metric, p.z, c)
    if isinstance(Sigma, PhaseConnection):
        Sigma = Sigma.coefficients(p)
    return c * float(q.alpha) * np.einsum("li,im->lm", np.asarray(Sigma), q.gbari)


def omega_a(Sigma, metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    """``Omega^a[g, Sigma] = -alt sbar``."""
    return -horizontal_form(sigma_bar(Sigma, metric, p, c))


def lambda_a(Sigma, metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    """``Lambda^a[g, Sigma] = (1/(c alpha)) g-bar^{jl} Sigma_l^i d0_i ^ d0_j``."""
    check_admissible(metric, p)
    q = PhaseQuantities(metric, p.z, c)
    if isinstance(Sigma, PhaseConnection):
        Sigma = Sigma.coefficients(p)
    N = np.einsum("jl,li->ij", q.gbar_upi, np.asarray(Sigma)) / (c * float(q.alpha))
    return vertical_bivector(N)


def perp_projector(q: PhaseQuantities) -> np.ndarray:
    """``P^r_m = g-bar^{ir} g-bar_{im} = delta^r_m + alpha^2 g-bar_{0m} dbar^r_0``."""
    return np.einsum("ir,im->rm", J.value(q.gbar_upi), J.value(q.gbari))


def bracket_sigma(sigma_value, q: PhaseQuantities) -> np.ndarray:
    """``[sigma] = sigma - (d ⌟^2 sigma) (x) tau``."""
    s = np.asarray(J.value(sigma_value))
    a2 = float(J.value(q.alpha2))
    return s + a2 * np.outer(s @ J.value(q.dbar0), J.value(q.gbar0))


def omega_a_closed(sigma_value, q: PhaseQuantities) -> np.ndarray:
    """``-g-bar_{im} g-bar^{ir} sigma_{lr} d^l ^ d^m``."""
    return -horizontal_form(np.asarray(J.value(sigma_value)) @ perp_projector(q))


def lambda_a_closed(sigma_value, q: PhaseQuantities, c: float = 1.0) -> np.ndarray:
    """``-(1/(c alpha)^2) g-bar^{il} g-bar^{jm} sigma_{lm} d0_i ^ d0_j``."""
    gu = np.asarray(J.value(q.gbar_upi))
    a = float(J.value(q.alpha))
    return vertical_bivector(-(gu @ np.asarray(J.value(sigma_value)) @ gu.T) / (c * a) ** 2)


def nu_g_sharp2(phi, q: PhaseQuantities, c: float = 1.0) -> np.ndarray:
    """``1/2 Alt((nu_tau o g#) (x) (nu_tau o g#))(phi)`` as a full vertical bivector."""
    gu = np.asarray(J.value(q.gbar_upi))
    a = float(J.value(q.alpha))
    B = gu @ np.asarray(phi) @ gu.T / (c * a) ** 2
    return 0.5 * vertical_bivector(B)


# -- constructions ----------------------------------------------------------------------------

def _spacetime(fn: Callable) -> Callable:
    """Evaluate a spacetime field at the base point of phase coordinates."""

    def wrapped(z, q):
        out = fn(z[:4])
        if isinstance(z, J.Jet) and not isinstance(out, J.Jet):
            out = J.Jet.constant(out, z.nvars, z.order)
        return out

    return wrapped


def sigma_from_omega_values(w, q: PhaseQuantities):
    """``-1/2 (w - (d ⌟ w) (x) tau - tau (x) (d ⌟^2 w))`` for a coefficient array ``w``."""
    d0, g0 = q.dbar0, q.gbar0
    first = J.einsum("s,sl->l", d0, w)
    second = J.einsum("ms,s->m", w, d0)
    extra = J.einsum("l,m->lm", first, g0) + J.einsum("l,m->lm", g0, second)
    return (w + extra * q.alpha2) * -0.5


def sigma_from_omega(omega: Callable, name: str = "omega", kind: str = "general") -> SigmaTensor:
    """Sigma tensor of the mixed construction from a spacetime (0,2) field ``omega(x)``."""
    w = _spacetime(omega)
    return SigmaTensor(name, lambda z, q: sigma_from_omega_values(w(z, q), q), kind)


def sigma_psi(psi: Callable, name: str = "psi") -> SigmaTensor:
    """Construction from a symmetric ``psi``: the tensor ``[sigma]`` is symmetric."""
    return sigma_from_omega(psi, name, "symmetric")


def sigma_phi(phi: Callable, name: str = "phi") -> SigmaTensor:
    """Construction from an antisymmetric ``phi``: ``Omega^a`` has full components ``phi``."""
    return sigma_from_omega(phi, name, "antisymmetric")


def sigma_mixed(psi: Callable, phi: Callable, name: str = "psi+phi") -> tuple[SigmaTensor, SigmaTensor]:
    """The mixed tensor computed directly and as the sum of the two pure constructions."""
    s_psi, s_phi = sigma_psi(psi), sigma_phi(phi)
    direct = sigma_from_omega(lambda x: psi(x) + phi(x), name)
    composed = SigmaTensor(f"{name}(composed)", lambda z, q: s_psi.evaluate(z, q) + s_phi.evaluate(z, q))
    return direct, composed


def Sigma_mixed_closed(psi: Callable, phi: Callable, metric: Metric, c: float = 1.0) -> PhaseConnection:
    """``-(1/(2 c alpha)) g-bar^{ir} (w_{lr} + alpha^2 g-bar_{0l} w_{rs} dbar^s_0)`` with ``w = psi + phi``."""

    def formula(z):
        q = PhaseQuantities(metric, z, c)
        x = z[:4]
        w = psi(x) + phi(x)
        inner = w + J.einsum("l,rs,s->lr", q.gbar0, w, q.dbar0) * q.alpha2
        return J.einsum("ir,lr->li", q.gbar_upi, inner) * J.reciprocal(q.alpha) * (-0.5 / c)

    return PhaseConnection("Sigma[psi+phi](closed)", formula)


def sigma_nu_tau(c: float = 1.0, hbar: float = 1.0, mass: float = 1.0, k: float | Callable = 0.0,
                 metric: Metric | None = None) -> SigmaTensor:
    """``(c^2 m / hbar)(g + k c^2 tau (x) tau)``; ``k`` may be a function of the phase coordinates."""
    scale = c * c * mass / hbar

    def formula(z, q):
        kk = k(z) if callable(k) else k
        tt = J.einsum("l,m->lm", q.tau, q.tau) * (c * c)
        return (q.g + tt * kk) * scale

    return SigmaTensor("nu_tau-sigma", formula, "symmetric")


def nu_tau_Sigma(metric: Metric, c: float = 1.0, hbar: float = 1.0, mass: float = 1.0) -> PhaseConnection:
    """``Sigma = (c^2 m/hbar) nu_tau``: ``Sigma_l^i = (c m/(hbar alpha)) dbar^i_l``."""

    def formula(z):
        q = PhaseQuantities(metric, z, c)
        return q.dbar.T * J.reciprocal(q.alpha) * (c * mass / hbar)

    return PhaseConnection("Sigma[nu_tau]", formula)


def sample_symmetric(eps: float = 0.3, seed: int = 7) -> Callable:
    """An analytic symmetric spacetime field ``psi_{lm}(x)``."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4))
    a = a + a.T
    b = rng.normal(size=(4, 4))
    b = b + b.T

    def psi(x):
        s = J.sin(x[0] * 0.4 + x[1] * 0.3 + x[3] * 0.2)
        return s * (0.3 * eps * b) + eps * a

    return psi


def sigma_projected_antisymmetric(F: Callable, name: str = "antisym-sbar") -> SigmaTensor:
    """``sigma = P^T F P`` with ``P`` the orthogonal projector, so ``sbar = sigma`` is antisymmetric."""

    def formula(z, q):
        Fx = F(z[:4])
        P = J.einsum("ir,im->rm", q.gbar_upi, q.gbari)
        return J.einsum("rl,rs,sm->lm", P, Fx, P)

    return SigmaTensor(name, formula, "antisymmetric")


# -- electromagnetic fields -------------------------------------------------------------------

@dataclass(frozen=True)
class EMField:
    """A closed spacetime 2-form given by full components ``F_{lm}(x)``.

    ``potential(x)`` returns ``A_l`` with ``dA = F`` when one is known.
    """

    name: str
    F: Callable[[object], object]
    potential: Callable[[object], object] | None = None
    params: Mapping[str, float] = field(default_factory=dict)


def _antisym_entry(x, i: int, j: int, val):
    zero = x[0] * 0.0
    rows = [[zero for _ in range(4)] for _ in range(4)]
    rows[i][j] = zero + val
    rows[j][i] = zero - val
    return J.stack([J.stack(r) for r in rows])


def uniform_field(E: float = 1.0) -> EMField:
    """``F = E dt ^ dx`` with potential ``A = E t dx``."""
    E = float(E)

    def F(x):
        return _antisym_entry(x, 0, 1, E)

    def A(x):
        zero = x[0] * 0.0
        return J.stack([zero, x[0] * E, zero, zero])

    return EMField("uniform", F, A, {"E": E})


def coulomb_field(k: float = 1.0) -> EMField:
    """``F = (k/r^2) dt ^ dr`` on the Schwarzschild chart ``(t, r, theta, phi)``, potential ``(k/r) dt``."""
    k = float(k)

    def F(x):
        return _antisym_entry(x, 0, 1, J.reciprocal(x[1] * x[1]) * k)

    def A(x):
        zero = x[0] * 0.0
        return J.stack([J.reciprocal(x[1]) * k, zero, zero, zero])

    return EMField("coulomb", F, A, {"k": k})


def non_closed_field(eps: float = 0.5) -> EMField:
    """``F = eps x^2 dt ^ dx``, not closed; used to exercise the closedness check."""

    def F(x):
        return _antisym_entry(x, 0, 1, x[2] * eps)

    return EMField("non-closed", F, None, {"eps": eps})


EM_CATALOG: dict[str, Callable[..., EMField]] = {
    "uniform": uniform_field,
    "coulomb": coulomb_field,
}


def build_field(field_id: str, params: Mapping[str, float] | None = None) -> EMField:
    try:
        factory = EM_CATALOG[field_id]
    except KeyError:
        raise KeyError(f"unknown field {field_id!r}; known: {sorted(EM_CATALOG)}") from None
    return factory(**dict(params or {}))


def closure_residual(em: EMField, x) -> float:
    """``max |dF|`` at a spacetime point."""
    F = em.F(J.Jet.seed(np.asarray(x, dtype=float), 1))
    return _mx(exterior_derivative(F))


def potential_residual(em: EMField, x) -> float:
    """``max |dA - F|`` at a spacetime point."""
    if em.potential is None:
        raise ValueError(f"{em.name} has no potential")
    A = em.potential(J.Jet.seed(np.asarray(x, dtype=float), 1))
    return _mx(exterior_derivative(A) - np.asarray(J.value(em.F(np.asarray(x, dtype=float)))))


def check_closed(em: EMField, x, tol: float = 1e-9) -> None:
    r = closure_residual(em, x)
    if r > tol:
        raise ClosednessError(f"{em.name}: |dF| = {r:.3e} at {np.asarray(x)}")


def em_sigma(em: EMField, charge: float, mass: float) -> SigmaTensor:
    """Sigma tensor of ``phi = (q/m) F``, entering ``Omega`` as ``(1/2)(q/m) F``."""
    k = 0.5 * charge / mass
    return sigma_phi(lambda x: em.F(x) * k, f"em[{em.name},q/m={charge / mass:g}]")


def em_connection(metric: Metric, em: EMField, charge: float, mass: float, c: float = 1.0) -> PhaseConnection:
    return connection_from_sigma(metric, em_sigma(em, charge, mass), c)


@dataclass
class EMStructure:
    omega: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    structures: PhaseStructures


def em_structure(metric: Metric, em: EMField, charge: float, mass: float, p: PhasePoint,
                 c: float = 1.0, hbar: float = 1.0, particle_mass: float = 1.0,
                 closure_tol: float = 1e-9) -> EMStructure:
    """``(Omega_em, Lambda_em, gamma_em)`` for ``Gamma = Gamma[g] + Sigma[(q/m) F]``."""
    check_closed(em, p.x, closure_tol)
    s = PhaseStructures(metric, em_connection(metric, em, charge, mass, c), p, c=c, hbar=hbar, mass=particle_mass)
    return EMStructure(s.val("omega"), s.val("lam"), s.val("gamma"), s)


def em_potential(em: EMField, charge: float, mass: float, kappa: float = 0.0) -> Callable:
    """Phase 1-form ``A = (1/2)(q/m) A_F + kappa x^1_0 dx^1`` as a function of ``z``.

    ``kappa = 0`` gives a spacetime potential; ``kappa != 0`` depends on the
    velocity and is the phase dependent control.
    """
    if em.potential is None:
        raise ValueError(f"{em.name} has no potential")
    k = 0.5 * charge / mass

    def A(z):
        base = em.potential(z[:4]) * k
        extra = J.stack([z[4] * 0.0, z[4] * kappa, z[4] * 0.0, z[4] * 0.0])
        return base + extra

    return A


def em_potential_residual(metric: Metric, em: EMField, charge: float, mass: float, p: PhasePoint,
                          c: float = 1.0, kappa: float = 0.0) -> float:
    """``|Omega_em - d(-c^2 tau + A)| / |Omega_em|`` with ``A`` from :func:`em_potential`."""
    s = em_structure(metric, em, charge, mass, p, c)
    z = J.Jet.seed(p.z, 1)
    q = PhaseQuantities(metric, z, c)
    A = em_potential(em, charge, mass, kappa)(z)
    form = J.einsum("l,la->a", q.tau * (-c * c) + A, E_X)
    om = s.omega
    return _mx(om - exterior_derivative(form)) / _mx(om)


# -- volume invariance, equivalence, Lie derivative of tau ------------------------------------

def invariance_of_regular_volume(metric: Metric, gam: PhaseConnection, A: Callable | None, p: PhasePoint,
                                 c: float = 1.0, regularity_floor: float = 1e-9) -> dict[str, float | bool]:
    """Top coefficients of ``(-c^2 tau + A) ^ Omega^3`` for ``Gamma`` and for ``Gamma[g]``.

    ``A(x)`` is a spacetime 1-form.  ``regular`` is false when the coefficient
    vanishes relative to ``6 c^4 alpha^4 |det g|``.
    """
    s = PhaseStructures(metric, gam, p, c=c)
    s0 = PhaseStructures(metric, chi(levi_civita(metric)), p, c=c)
    one = -c * c * s.val("tau")
    if A is not None:
        one = one + np.asarray(J.value(A(p.x))) @ E_X
    lhs = wedge_component([one, s.val("omega")] + [s.val("omega")] * 2, VOLUME_INDEX)
    rhs = wedge_component([one, s0.val("omega")] + [s0.val("omega")] * 2, VOLUME_INDEX)
    a = float(J.value(s.alpha))
    ref = 6.0 * c ** 4 * a ** 4 * abs(float(np.linalg.det(metric.components(p.x))))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs) / ref,
        "regular": abs(rhs) > regularity_floor * ref,
    }


def degenerate_potential(metric: Metric, p: PhasePoint, c: float = 1.0) -> Callable:
    """Constant spacetime 1-form ``A = c^2 tau(p)``, which kills ``-c^2 tau + A`` at ``p``."""
    q = PhaseQuantities(metric, p.z, c)
    A = c * c * np.asarray(J.value(q.tau))
    return lambda x: A


def equivalence_residuals(metric: Metric, gam1: PhaseConnection, gam2: PhaseConnection, p: PhasePoint,
                          c: float = 1.0) -> dict[str, float]:
    """Differences of ``Omega``, ``Lambda`` and ``alt`` of the ``sbar`` difference, each normalized."""
    s1 = PhaseStructures(metric, gam1, p, c=c)
    s2 = PhaseStructures(metric, gam2, p, c=c)
    diff = sigma_bar(gam1.coefficients(p) - gam2.coefficients(p), metric, p, c)
    return {
        "omega": _mx(s1.val("omega") - s2.val("omega")) / s1.scale_omega,
        "lambda": _mx(s1.val("lam") - s2.val("lam")) / s1.scale_lambda,
        "alt_sigma_bar": _mx(diff - diff.T) / s1.scale_omega,
    }


def lie_sigma_tau(Sigma: PhaseConnection, metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    """``L_Sigma tau = Sigma_l^j d0_j tau_m d^l ^ d^m``."""
    check_admissible(metric, p)
    q = PhaseQuantities(metric, J.Jet.seed(p.z, 1), c)
    d0tau = np.asarray(q.tau.grad)[4:]
    P = np.asarray(Sigma.coefficients(p)) @ d0tau
    return expand_wedge(P, E_X, E_X)


def omega_difference(metric: Metric, gam: PhaseConnection, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    """``Omega[g, Gamma] - Omega[g]`` from the two structure constructions."""
    s = PhaseStructures(metric, gam, p, c=c)
    s0 = PhaseStructures(metric, chi(levi_civita(metric)), p, c=c)
    return s.val("omega") - s0.val("omega")


def lambda_difference(metric: Metric, gam: PhaseConnection, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    s = PhaseStructures(metric, gam, p, c=c)
    s0 = PhaseStructures(metric, chi(levi_civita(metric)), p, c=c)
    return s.val("lam") - s0.val("lam")


def sigma_symmetry_defect(sigma: SigmaTensor, metric: Metric, p: PhasePoint, c: float = 1.0) -> float:
    """``|alt [sigma]| / |sigma|`` at ``p``."""
    q = PhaseQuantities(metric, p.z, c)
    b = bracket_sigma(sigma.evaluate(p.z, q), q)
    return _mx(b - b.T) / max(_mx(b), 1e-300)


def classify_sigma(metric: Metric, sigma: SigmaTensor, samples, tol: float = 1e-8, c: float = 1.0, **kw):
    """Classifier verdict for ``Gamma[g] + Sigma[g, sigma]`` with the ``[sigma]`` symmetry defect."""
    samples = list(samples)
    verdict = classify_phase_structure(metric, connection_from_sigma(metric, sigma, c), samples, tol, c=c, **kw)
    defect = max(sigma_symmetry_defect(sigma, metric, p, c) for p in samples)
    return verdict, defect
