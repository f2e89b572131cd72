"""Spacetime connections and the tangent-bundle pair (Upsilon, Xi).

Index conventions
-----------------
* Linear connection coefficients ``K[l, n, m] = K_l^n_m`` (form index, upper
  index, lower index); the sign is the negative of the textbook Christoffel
  symbol.
* General connections ``K[l, n] = K_l^n(x, xdot)``; a linear connection gives
  ``K_l^n = K_l^n_m xdot^m``.
* Curvature ``R[l, m, n, s]`` is the antisymmetric coefficient of
  ``R = R_lm^n_s d^l ^ d^m (x) d_n (x) d^s``; for Levi-Civita it agrees with the
  textbook Riemann tensor ``R^n_{s l m}``.
* The tangent chart has axes ``0..3`` for ``x`` and ``4..7`` for ``xdot``.

Coordinates are always the leading variables of the seed a jet was built
from, so ``g.derivative()[:4]`` are the spacetime partials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jet as J
from .fields import FieldProvider
from .metrics import Metric
from .tensor import exterior_derivative, lie_derivative_form, schouten

DELTA4 = np.eye(4)
PX = np.hstack([np.eye(4), np.zeros((4, 4))])  # selects d^l / d_l on the tangent chart
PV = np.hstack([np.zeros((4, 4)), np.eye(4)])  # selects dot-d^l / dot-d_l


def seed_point(x, order: int) -> J.Jet:
    return J.Jet.seed(np.asarray(x, dtype=float), order)


def spatial_partials(jet: J.Jet) -> J.Jet:
    """``d_l`` of a jet built on a seed whose first four variables are ``x``."""
    return jet.derivative()[:4]


def max_residual(a, scale=1.0) -> float:
    a = np.asarray(J.value(a))
    return float(np.max(np.abs(a))) / max(float(scale), 1e-300) if a.size else 0.0


def norm(a) -> float:
    a = np.asarray(J.value(a))
    return float(np.max(np.abs(a))) if a.size else 0.0


# -- linear connections ----------------------------------------------------------

@dataclass(frozen=True)
class LinearConnection:
    """Coefficients ``K_l^n_m(x)`` given by a jet formula in the coordinates.

    ``loss`` is the number of derivative orders the formula consumes (1 for
    connections assembled from metric first derivatives).
    """

    name: str
    formula: Callable[[object], object]
    loss: int = 0

    def jet(self, x: J.Jet):
        return self.formula(x)

    def coefficients(self, x) -> np.ndarray:
        return np.asarray(J.value(self.formula(seed_point(x, self.loss) if self.loss else np.asarray(x, float))))

    def jet_at(self, x, order: int = 1) -> J.Jet:
        """Coefficients with ``order`` exact derivatives in the 4 coordinates."""
        out = self.formula(seed_point(x, order + self.loss))
        return J.as_jet(out, 4, order)

    @property
    def provider(self) -> FieldProvider:
        return FieldProvider(4, lambda x: self.formula(x), max_order=2 - self.loss, name=self.name)

    def plus(self, other: "LinearConnection", name: str | None = None) -> "LinearConnection":
        return LinearConnection(
            name or f"{self.name}+{other.name}",
            lambda x: self.formula(x) + other.formula(x),
            max(self.loss, other.loss),
        )

    def as_general(self) -> "GeneralConnection":
        return GeneralConnection(
            self.name, lambda z: J.einsum("lnm,m->ln", self.formula(z[:4]), z[4:]), self.loss
        )


def levi_civita_formula(metric: Metric) -> Callable:
    def formula(x):
        g = metric.jet(x) if isinstance(x, J.Jet) else metric.formula(x)
        if not isinstance(g, J.Jet) or g.order == 0:
            raise ValueError("Levi-Civita coefficients need metric derivatives; pass a seeded jet")
        dg = spatial_partials(g)  # dg[r, m, n] = d_r g_mn
        ginv = J.inv(g.truncate(g.order - 1))
        return -0.5 * (
            J.einsum("lr,mrn->mln", ginv, dg)
            + J.einsum("lr,nrm->mln", ginv, dg)
            - J.einsum("lr,rmn->mln", ginv, dg)
        )

    return formula


def levi_civita(metric: Metric, x=None):
    """``K[g]`` as a connection, or its coefficients at ``x`` when given."""
    conn = LinearConnection(f"K[{metric.name}]", levi_civita_formula(metric), loss=1)
    return conn if x is None else conn.coefficients(x)


def zero_connection() -> LinearConnection:
    def formula(x):
        z = np.zeros((4, 4, 4))
        return J.Jet.constant(z, x.nvars, x.order) if isinstance(x, J.Jet) else z

    return LinearConnection("K=0", formula)


def constant_connection(coeffs, name: str = "constant") -> LinearConnection:
    coeffs = np.array(coeffs, dtype=float)

    def formula(x):
        return J.Jet.constant(coeffs, x.nvars, x.order) if isinstance(x, J.Jet) else coeffs

    return LinearConnection(name, formula)


def phi_to_Phi(metric: Metric, phi: Callable, name: str = "Phi") -> LinearConnection:
    """``Phi_l^n_m = g^{nr} phi_{l r m}`` for a (0,3) field ``phi``."""

    def formula(x):
        g = metric.jet(x) if isinstance(x, J.Jet) else metric.formula(x)
        return J.einsum("nr,lrm->lnm", J.inv(g), phi(x))

    return LinearConnection(name, formula)


def perturbed(metric: Metric, phi: Callable, name: str = "phi") -> LinearConnection:
    """``K = K[g] + Phi`` with ``Phi`` built from ``phi``."""
    return levi_civita(metric).plus(phi_to_Phi(metric, phi, name), f"K[{metric.name}]+{name}")


def _field(fn: Callable[[object], object]) -> Callable:
    """Wrap a coordinate formula so constants keep the jet structure of ``x``."""

    def wrapped(x):
        out = fn(x)
        if isinstance(x, J.Jet) and not isinstance(out, J.Jet):
            out = J.Jet.constant(out, x.nvars, x.order)
        return out

    return wrapped


def sample_covector(eps: float = 0.3) -> Callable:
    """An analytic spacetime 1-form ``psi_l(x)`` used to build perturbations."""

    def psi(x):
        return J.stack([
            eps * (0.5 + J.sin(x[1] * 0.7 + x[0] * 0.3)),
            eps * J.cos(x[2] * 0.5 + 0.2 * x[3]),
            eps * (0.3 + 0.2 * J.sin(x[0] - x[3])),
            eps * 0.4 * J.cos(x[1] * 0.3),
        ])

    return psi


def sample_two_form(eps: float = 0.3) -> Callable:
    """An analytic antisymmetric ``F_lm(x)``."""

    def F(x):
        a = eps * (1.0 + 0.3 * J.sin(x[2]))
        b = eps * 0.5 * J.cos(x[0] + x[3])
        c = eps * (0.2 + 0.1 * J.sin(x[1]))
        zero = 0.0 * x[0]
        rows = [
            [zero, a, b, c],
            [-1.0 * a, zero, c, -1.0 * b],
            [-1.0 * b, -1.0 * c, zero, a],
            [-1.0 * c, b, -1.0 * a, zero],
        ]
        return J.stack([J.stack(r) for r in rows])

    return F


def projective_Phi(psi: Callable, name: str = "projective") -> LinearConnection:
    """``Phi_l^n_m = delta^n_l psi_m + delta^n_m psi_l``."""

    def formula(x):
        p = psi(x)
        return J.einsum("nl,m->lnm", DELTA4, p) + J.einsum("nm,l->lnm", DELTA4, p)

    return LinearConnection(name, _field(formula))


def projective(metric: Metric, psi: Callable | None = None) -> LinearConnection:
    psi = psi or sample_covector()
    return levi_civita(metric).plus(projective_Phi(psi), f"K[{metric.name}]+projective")


def phi_weyl_like(metric: Metric, psi: Callable | None = None) -> Callable:
    """``phi_{l r m} = g_{lm} psi_r``: symmetric in (l, m), so torsion free, with non-symmetric nabla g."""
    psi = psi or sample_covector()

    def phi(x):
        g = metric.jet(x) if isinstance(x, J.Jet) else metric.formula(x)
        return J.einsum("lm,r->lrm", g, psi(x))

    return phi


def phi_symmetric(metric: Metric, psi: Callable | None = None) -> Callable:
    """Totally symmetric ``phi = g (.) psi`` (mean over the three placements)."""
    psi = psi or sample_covector()

    def phi(x):
        g = metric.jet(x) if isinstance(x, J.Jet) else metric.formula(x)
        p = psi(x)
        return (J.einsum("lr,m->lrm", g, p) + J.einsum("rm,l->lrm", g, p) + J.einsum("lm,r->lrm", g, p)) * (1.0 / 3.0)

    return phi


def phi_antisymmetric(F: Callable | None = None, psi: Callable | None = None) -> Callable:
    """``phi_{l r m} = F_{l r} psi_m``: antisymmetric in the first two slots."""
    F = F or sample_two_form()
    psi = psi or sample_covector()

    def phi(x):
        return J.einsum("lr,m->lrm", F(x), psi(x))

    return phi


def _levi_civita_symbol() -> np.ndarray:
    from .tensor import permutation_sign

    e = np.zeros((4, 4, 4, 4))
    for idx in itertools.permutations(range(4)):
        e[idx] = permutation_sign(list(idx))
    return e


LEVI_CIVITA_SYMBOL = _levi_civita_symbol()


def phi_totally_antisymmetric(eps: float = 0.3) -> Callable:
    """``phi_{abc} = eps_{abcd} h^d`` (metric connection with skew torsion)."""

    def phi(x):
        h = J.stack([eps * (1.0 + 0.2 * J.sin(x[1])), eps * 0.5 * J.cos(x[0]),
                     eps * (0.3 + 0.1 * J.sin(x[3])), eps * (0.7 + 0.0 * x[2])])
        return J.einsum("abcd,d->abc", LEVI_CIVITA_SYMBOL, h)

    return phi


# -- torsion, curvature, metricity -----------------------------------------------

def torsion(K: LinearConnection, x) -> np.ndarray:
    """``T[n, l, m] = -(K_l^n_m - K_m^n_l)``."""
    k = K.coefficients(x)
    return -(np.einsum("lnm->nlm", k) - np.einsum("mnl->nlm", k))


def curvature(K: LinearConnection, x) -> np.ndarray:
    """``R_lm^n_s = -(P_lm - P_ml)`` with ``P = d_l K_m^n_s + K_l^r_s K_m^n_r``."""
    kj = K.jet_at(x, order=1)
    dk = kj.grad  # dk[l, m, n, s] = d_l K_m^n_s
    k = kj.val
    P = dk + np.einsum("lrs,mnr->lmns", k, k)
    return -(P - P.transpose(1, 0, 2, 3))


def nabla_metric(K: LinearConnection, metric: Metric, x) -> np.ndarray:
    """``(nabla_l g)_{mn} = d_l g_mn + g_rn K_l^r_m + g_mr K_l^r_n``."""
    gj = metric.provider.jet(x, order=1)
    g, dg = gj.val, gj.grad
    k = K.coefficients(x)
    return dg + np.einsum("rn,lrm->lmn", g, k) + np.einsum("mr,lrn->lmn", g, k)


def nabla_inverse_metric(K: LinearConnection, metric: Metric, x) -> np.ndarray:
    """``(nabla_l gbar)^{nm} = d_l g^{nm} - g^{rm} K_l^n_r - g^{nr} K_l^m_r``."""
    gj = J.inv(metric.provider.jet(x, order=1))
    gi, dgi = gj.val, gj.grad
    k = K.coefficients(x)
    return dgi - np.einsum("rm,lnr->lnm", gi, k) - np.einsum("nr,lmr->lnm", gi, k)


def dK_g_coefficient(K: LinearConnection, metric: Metric, x) -> np.ndarray:
    """``C[l, m, r] = d_l g_mr + g_sm K_l^s_r`` (the expansion coefficient, up to its factor 2)."""
    gj = metric.provider.jet(x, order=1)
    return gj.grad + np.einsum("sm,lsr->lmr", gj.val, K.coefficients(x))


def dK_g(K: LinearConnection, metric: Metric, x) -> np.ndarray:
    """Full components ``D[l, m, r]`` of ``d_K g = 2 C_lmr (d^l ^ d^m) (x) d^r``.

    ``D = 2 (C - C^T)`` in the determinant convention, so that
    ``L_K g_flat = 1/2 D(., .)(xdot)`` componentwise.
    """
    c = dK_g_coefficient(K, metric, x)
    return 2.0 * (c - c.transpose(1, 0, 2))


# -- general connections and the tangent chart -----------------------------------

@dataclass(frozen=True)
class GeneralConnection:
    """``K_l^n(x, xdot)`` given by a jet formula on the 8 tangent coordinates."""

    name: str
    formula: Callable[[J.Jet], object]
    loss: int = 0

    def jet(self, z: J.Jet):
        return self.formula(z)

    def coefficients(self, z) -> np.ndarray:
        return np.asarray(J.value(self.formula(seed_point(z, max(self.loss, 1)))))


def nonlinear_example(metric: Metric) -> GeneralConnection:
    """``K = K[g] + upsilon`` with ``K_l^n = K[g]_l^n_m xdot^m + delta^n_l``."""
    lc = levi_civita(metric).as_general()
    return GeneralConnection(f"K[{metric.name}]+upsilon", lambda z: lc.formula(z) + DELTA4, lc.loss)


def as_general(K) -> GeneralConnection:
    return K if isinstance(K, GeneralConnection) else K.as_general()


def tangent_seed(x, xdot, order: int = 2) -> J.Jet:
    return seed_point(np.concatenate([np.asarray(x, float), np.asarray(xdot, float)]), order)


def metric_flat_form(metric: Metric, z: J.Jet):
    """Components of ``g_flat = g_{rm} xdot^r d^m`` on the tangent chart."""
    return J.einsum("r,rm,ma->a", z[4:], metric.jet(z[:4]), PX)


def upsilon_jet(metric: Metric, K, z: J.Jet):
    """Full components of ``Upsilon = g_lm (dot-d^l - K_n^l d^n) ^ d^m``."""
    K = as_general(K)
    g = metric.jet(z[:4])
    k = K.jet(z)  # k[n, l] = K_n^l
    order = min(J.order_of(g), J.order_of(k))
    g = g.truncate(order) if isinstance(g, J.Jet) else g
    first = J.einsum("lm,la,mb->ab", g, PV, PX)
    second = J.einsum("lm,nl,na,mb->ab", g, k, PX, PX)
    a = first - second
    return a - a.swapaxes(0, 1)


def xi_jet(metric: Metric, K, z: J.Jet):
    """Full components of ``Xi = g^{lm} (d_l + K_l^n dot-d_n) ^ dot-d_m``."""
    K = as_general(K)
    gi = J.inv(metric.jet(z[:4]))
    k = K.jet(z)
    order = min(J.order_of(gi), J.order_of(k))
    gi = gi.truncate(order) if isinstance(gi, J.Jet) else gi
    first = J.einsum("lm,la,mb->ab", gi, PX, PV)
    second = J.einsum("lm,ln,na,mb->ab", gi, k, PV, PV)
    m = first + second
    return m - m.swapaxes(0, 1)


def upsilon_xi(metric: Metric, K, x, xdot) -> tuple[np.ndarray, np.ndarray]:
    z = tangent_seed(x, xdot, 1 + as_general(K).loss)
    return J.value(upsilon_jet(metric, K, z)), J.value(xi_jet(metric, K, z))


def eta_coefficient(metric: Metric, K, x, xdot) -> float:
    """Component ``[4,5,6,7,0,1,2,3]`` of ``Upsilon^4``."""
    from .tensor import wedge_component

    ups, _ = upsilon_xi(metric, K, x, xdot)
    return wedge_component([ups] * 4, [4, 5, 6, 7, 0, 1, 2, 3])


def lie_K_flat(metric: Metric, K, z: J.Jet):
    """Full components (on the 4 horizontal slots) of ``L_K g_flat``.

    Horizontal Lie derivative of a 1-form ``f_m d^m``:
    ``(D_l f_m - D_m f_l)`` with ``D_l = d_l + K_l^n dot-d_n``.
    """
    K = as_general(K)
    g = metric.jet(z[:4])
    f = J.einsum("r,rm->m", z[4:], g)
    df = f.derivative()  # df[a, m]
    k = K.jet(z)
    D = df[:4] + J.einsum("ln,nm->lm", k, df[4:])
    return D - D.swapaxes(0, 1)


def lie_K_horizontal(K, phi_jet_fn: Callable, z: J.Jet):
    """``L_K`` of a horizontal r-form given by its full 4-slot components.

    ``phi_jet_fn(z)`` returns the full components as a jet of order >= 1.
    The result has full components ``(r+1) alt(D phi)``.
    """
    from .tensor import alt_array

    K = as_general(K)
    f = phi_jet_fn(z)
    df = f.derivative()
    k = K.jet(z)
    D = df[:4] + J.einsum("ln,n...->l...", k, df[4:])
    r = f.ndim
    return (r + 1) * alt_array(J.value(D)) if r else J.value(D)


def general_curvature(K, z: J.Jet) -> np.ndarray:
    """``R_lm^n = -(P_lm - P_ml)`` with ``P = d_l K_m^n + K_l^r dot-d_r K_m^n``."""
    K = as_general(K)
    k = K.jet(z)
    dk = k.derivative()
    kv, dkv = J.value(k), J.value(dk)
    P = dkv[:4] + np.einsum("lr,rmn->lmn", kv, dkv[4:])
    return -(P - P.transpose(1, 0, 2))


def lie_R_horizontal(R: np.ndarray, phi_jet: J.Jet) -> np.ndarray:
    """``L_R`` of a horizontal r-form: full components ``(r+2)!/r! alt(R_{l1 l2}^m dot-d_m phi)``."""
    from math import factorial

    from .tensor import alt_array

    r = phi_jet.ndim
    dphi = J.value(phi_jet.derivative())[4:]
    letters = "abcdefg"[:r]
    prod = np.einsum(f"pqm,m{letters}->pq{letters}", R, dphi)
    return factorial(r + 2) // factorial(r) * alt_array(prod)


def liouville_lie(form_fn: Callable, z: J.Jet) -> np.ndarray:
    """``L_I`` of a horizontal form field (full 4-slot components) with ``I = xdot^n dot-d_n``.

    The form is padded to the 8-dim chart and differentiated generically.
    """
    f = form_fn(z)
    p = f.ndim
    pad = f
    for axis in range(p):
        pad = J.einsum(_pad_spec(p, axis), pad, PX)
    I = J.einsum("n,na->a", z[4:], PV)
    I = J.as_jet(I, z.nvars, 1)
    return lie_derivative_form(I, pad.truncate(1))[(slice(0, 4),) * p]


def _pad_spec(p: int, axis: int) -> str:
    letters = "abcdefgh"[:p]
    out = letters[:axis] + "z" + letters[axis + 1:]
    return f"{letters},{letters[axis]}z->{out}".replace("z", "x")


def flat_form_full(metric: Metric):
    """``z -> g_flat`` restricted to the horizontal slots, as a jet function."""
    return lambda z: J.einsum("r,rm->m", z[4:], metric.jet(z[:4]))


def lie_K_flat_jet(metric: Metric, K):
    """``z -> L_K g_flat`` (horizontal 2-form) as a jet function."""
    return lambda z: lie_K_flat(metric, K, z)


# -- classification ----------------------------------------------------------------

def tangent_residuals(metric: Metric, K, x, xdot) -> dict[str, float]:
    """Residuals of the tangent-bundle structure at one tangent point."""
    gen = as_general(K)
    z = tangent_seed(x, xdot, 1 + gen.loss)
    ups = upsilon_jet(metric, gen, z)
    xi = xi_jet(metric, gen, z)
    ups_v, xi_v = J.value(ups), J.value(xi)
    scale_u = norm(ups_v)
    d_ups = exterior_derivative(ups.truncate(1))
    xx = schouten(xi.truncate(1), xi.truncate(1))
    flat = J.einsum("r,rm,ma->a", z[4:], metric.jet(z[:4]), PX)
    dflat = exterior_derivative(flat.truncate(1))
    lk = J.value(lie_K_flat(metric, gen, z))
    out = {
        "d_upsilon": max_residual(d_ups, scale_u),
        "xi_xi": max_residual(xx, norm(xi_v) ** 2),
        "upsilon_minus_dflat": max_residual(ups_v - dflat, scale_u),
        "lie_K_flat": max_residual(lk, scale_u * max(1.0, norm(xdot))),
        "duality": abs(float(np.sum(xi_v * ups_v)) / 2.0 + 4.0),
    }
    return out


def nabla_g_symmetry(K: LinearConnection, metric: Metric, x) -> float:
    """Failure of ``(nabla_l g)_{mn}`` to be symmetric in ``(l, m)``."""
    ng = nabla_metric(K, metric, x)
    return max_residual(ng - ng.transpose(1, 0, 2), max(1.0, norm(metric.components(x))))


def classify_tangent_structure(metric: Metric, K, points, tol: float = 1e-8) -> dict:
    """Symplectic/Poisson verdict for ``(Upsilon, Xi)`` over tangent points ``(x, xdot)``."""
    if not points:
        raise ValueError("need at least one sample point")
    worst: dict[str, float] = {}
    for x, xdot in points:
        for key, val in tangent_residuals(metric, K, x, xdot).items():
            worst[key] = max(worst.get(key, 0.0), val)
        if isinstance(K, LinearConnection):
            tor = max_residual(torsion(K, x), 1.0)
            worst["torsion"] = max(worst.get("torsion", 0.0), tor)
            worst["nabla_g_asymmetry"] = max(worst.get("nabla_g_asymmetry", 0.0), nabla_g_symmetry(K, metric, x))
    return {
        "symplectic": worst["d_upsilon"] <= tol,
        "poisson": worst["xi_xi"] <= tol,
        "exact": worst["upsilon_minus_dflat"] <= tol,
        "residuals": worst,
        "points": len(points),
        "tolerance": tol,
    }


def sample_tangent_points(metric: Metric, count: int, rng: np.random.Generator, speed: float = 1.0):
    pts = []
    while len(pts) < count:
        x = np.array([rng.uniform(lo, hi) for lo, hi in metric.ranges])
        if not metric.domain(x):
            continue
        pts.append((x, rng.uniform(-speed, speed, 4)))
    return pts
