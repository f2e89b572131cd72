"""Phase connections and the geometric structures they induce on the 7-dim phase chart.

Phase axes are ``0..3`` for ``x^l`` and ``4..6`` for ``x^i_0``.  Forms and
multivectors are full antisymmetric arrays in the determinant wedge
convention, so ``U ^ V`` has components ``U_a V_b - U_b V_a``.  Every object
that needs derivatives is built as a jet over the 7 phase coordinates from an
order-2 seed, so exterior derivatives and Schouten brackets are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jet as J
from .kinematics import AdmissibilityError, PhasePoint, PhaseQuantities, check_admissible, dbar_arrays
from .metrics import Metric
from .spacetime import LinearConnection
from .tensor import (
    alt_array,
    expand_wedge,
    exterior_derivative,
    lie_derivative_form,
    pair,
    schouten,
    wedge_array,
    wedge_component,
)

DIM = 7
E_X = np.eye(DIM)[:4]  # d^l / d_l
E_V = np.eye(DIM)[4:]  # d^i_0 / d0_i
VOLUME_INDEX = (4, 5, 6, 0, 1, 2, 3)

# Sign that turns the coordinate Schouten formula of ``tensor.schouten`` into
# the bracket normalization under which metric structures satisfy
# ``[Lambda, Lambda] = (2/c^2) gamma ^ Lambda``.
SCHOUTEN_SIGN = -1.0


class StructureConsistencyError(RuntimeError):
    """A verdict violates contact => ACC or Jacobi => ACPJ."""


# -- phase connections --------------------------------------------------------------

@dataclass(frozen=True)
class PhaseConnection:
    """Coefficients ``Gamma_l^i(x, v)`` as a jet formula over the phase coordinates.

    ``formula(z)`` returns a ``(4, 3)`` array or jet; ``loss`` is the number of
    derivative orders it consumes.
    """

    name: str
    formula: Callable[[object], object]
    loss: int = 0

    def jet(self, z):
        out = self.formula(z)
        if isinstance(z, J.Jet) and not isinstance(out, J.Jet):
            out = J.Jet.constant(out, z.nvars, z.order)
        return out

    def coefficients(self, p: PhasePoint) -> np.ndarray:
        return np.asarray(J.value(self.jet(J.Jet.seed(p.z, self.loss) if self.loss else p.z)))

    def partials(self, p: PhasePoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(Gamma, d_m Gamma, d0_j Gamma)`` with the derivative index leading."""
        gam = J.as_jet(self.jet(J.Jet.seed(p.z, 1 + self.loss)), DIM, 1)
        return gam.val, gam.grad[:4], gam.grad[4:]

    def plus(self, other: "PhaseConnection", name: str | None = None) -> "PhaseConnection":
        return PhaseConnection(
            name or f"{self.name}+{other.name}",
            lambda z: self.jet(z) + other.jet(z),
            max(self.loss, other.loss),
        )


def chi(K: LinearConnection) -> PhaseConnection:
    """``Gamma_l^i = dbar^i_r K_l^r_s dbar^s_0``."""

    def formula(z):
        dbar0, dbar = dbar_arrays(z[4:])
        return J.einsum("ir,lrs,s->li", dbar, K.jet(z[:4]), dbar0)

    return PhaseConnection(f"chi({K.name})", formula, K.loss)


def zero_phase_connection() -> PhaseConnection:
    return PhaseConnection("Gamma=0", lambda z: np.zeros((4, 3)))


def sample_phase_perturbation(eps: float = 0.2) -> PhaseConnection:
    """A generic smooth ``Sigma_l^i(x, v)`` depending on both position and velocity."""
    rng = np.random.default_rng(1234)
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(4, 3, 7)) * 0.3

    def formula(z):
        lin = J.einsum("lia,a->li", b, z)
        return (J.sin(lin) + a) * eps if isinstance(z, J.Jet) else eps * (np.sin(np.einsum("lia,a->li", b, z)) + a)

    return PhaseConnection(f"Sigma(eps={eps})", formula)


def phase_curvature(gam: PhaseConnection, p: PhasePoint) -> np.ndarray:
    """``R[Gamma]_{l m}^i`` (antisymmetric in ``l m``): ``-(P - P^T)`` with
    ``P_{lm}^i = d_l Gamma_m^i + Gamma_l^j d0_j Gamma_m^i``."""
    val, dx, dv = gam.partials(p)
    P = dx + np.einsum("lj,jmi->lmi", val, dv)
    return -(P - P.transpose(1, 0, 2))


# -- structure fields at a point ----------------------------------------------------------

class PhaseStructures:
    """All phase structures of ``(g, Gamma)`` at one point, as order-1 jets where needed.

    ``gamma_fibre`` optionally overrides the fibre components ``gamma^i`` of
    the dynamical connection (any dynamical phase connection); by default
    ``gamma^i = Gamma_r^i dbar^r_0``.
    """

    def __init__(self, metric: Metric, gam: PhaseConnection, p: PhasePoint, c: float = 1.0,
                 hbar: float = 1.0, mass: float = 1.0, gamma_fibre: Callable | None = None):
        check_admissible(metric, p)
        self.metric, self.connection, self.point = metric, gam, p
        self.c, self.hbar, self.mass = float(c), float(hbar), float(mass)
        z = J.Jet.seed(p.z, 2 + gam.loss)
        self.z = z
        q = PhaseQuantities(metric, z, c)
        self.q = q
        self.Gamma = J.as_jet(gam.jet(z), DIM, 1).truncate(1)
        self.alpha = q.alpha
        # horizontal lifts H_l = d_l + Gamma_l^i d0_i and the vertical frame
        self.H = J.einsum("li,ia->la", self.Gamma, E_V) + E_X
        if gamma_fibre is None:
            self.gamma_fibre = J.einsum("li,l->i", self.Gamma, q.dbar0)
        else:
            self.gamma_fibre = J.as_jet(gamma_fibre(z), DIM, 1).truncate(1)
        ca = q.alpha * self.c
        self.gamma = (J.einsum("l,la->a", q.dbar0, E_X) + J.einsum("i,ia->a", self.gamma_fibre, E_V)) * ca
        self.tau = J.einsum("l,la->a", q.tau, E_X)
        theta = E_V - J.einsum("li,la->ia", self.Gamma, E_X)
        self.omega = expand_wedge(q.gbari * ca, theta, E_X)
        self.lam = expand_wedge(q.gbar_upi.T * (1.0 / ca), self.H, E_V)

    # values
    def val(self, name: str) -> np.ndarray:
        return np.asarray(J.value(getattr(self, name)))

    @property
    def scale_omega(self) -> float:
        return float(np.max(np.abs(self.val("omega"))))

    @property
    def scale_lambda(self) -> float:
        return float(np.max(np.abs(self.val("lam"))))

    # derived objects
    def d_omega(self) -> np.ndarray:
        return exterior_derivative(self.omega)

    def d_tau(self) -> np.ndarray:
        return exterior_derivative(self.tau.truncate(1))

    def gamma_lambda(self) -> np.ndarray:
        return schouten(self.gamma, self.lam)

    def lambda_lambda(self) -> np.ndarray:
        return schouten(self.lam, self.lam, SCHOUTEN_SIGN)

    def gamma_wedge_lambda(self) -> np.ndarray:
        return wedge_array(self.val("gamma"), self.val("lam"))

    def sharp(self, form) -> np.ndarray:
        """``Lambda#(phi)^b = phi_a Lambda^{ab}``."""
        return np.asarray(form) @ self.val("lam")

    def flat(self, vector) -> np.ndarray:
        """``Omega_flat(X)_b = X^a Omega_{ab}``."""
        return np.asarray(vector) @ self.val("omega")

    def sharp2(self, form2) -> np.ndarray:
        """``(Lambda# (x) Lambda#)(F)^{cd} = F_{ab} Lambda^{ac} Lambda^{bd}``."""
        lam = self.val("lam")
        return lam.T @ np.asarray(form2) @ lam

    def flat2(self, bivector) -> np.ndarray:
        om = self.val("omega")
        return om.T @ np.asarray(bivector) @ om

    # Lie derivatives of tau
    def lie_gamma_tau_jet(self) -> J.Jet:
        """``L_Gamma tau``: expansion ``(d_l tau_m + Gamma_l^j d0_j tau_m) d^l ^ d^m``."""
        dtau = self.q.tau.derivative()  # [a, m], order 1
        P = dtau[:4] + J.einsum("lj,jm->lm", self.Gamma, dtau[4:])
        return expand_wedge(P, E_X, E_X)

    def lie_gamma_tau(self) -> np.ndarray:
        return self.lie_gamma_tau_jet().val

    def lie_R_tau(self) -> np.ndarray:
        """``L_R tau`` with ``R`` the phase curvature: ``3! alt(R_{mn}^j d0_j tau_l)``."""
        R = phase_curvature(self.connection, self.point)
        d0tau = np.asarray(J.value(self.q.tau.derivative()))[4:]  # [j, l]
        coeff = np.einsum("mnj,jl->lmn", R, d0tau)
        out = np.zeros((DIM,) * 3)
        out[:4, :4, :4] = 6.0 * alt_array(coeff)
        return out

    def nu_tau_field(self, X) -> J.Jet:
        """``nu_tau(X) = (1/(c alpha)) (X^i - v^i X^0) d0_i`` for a constant spacetime vector ``X``."""
        X = np.asarray(X, dtype=float)
        v = self.z[4:].truncate(1)
        fib = (v * (-X[0]) + X[1:]) * (1.0 / self.c) * J.reciprocal(self.alpha.truncate(1))
        return J.einsum("i,ia->a", fib, E_V)

    def lie_nu_lie_gamma_tau(self, X) -> np.ndarray:
        return lie_derivative_form(self.nu_tau_field(X), self.lie_gamma_tau_jet())

    def lie_gamma_of_tau(self) -> np.ndarray:
        """``L_gamma tau = i_gamma d tau`` (``tau(gamma) = 1`` is constant)."""
        return self.val("gamma") @ self.d_tau()

    # volumes
    def covariant_volume(self) -> float:
        om = self.val("omega")
        return wedge_component([-self.c ** 2 * self.val("tau"), om, om, om], VOLUME_INDEX)

    def contravariant_volume(self) -> float:
        lam = self.val("lam")
        return wedge_component([-self.val("gamma") / self.c ** 2, lam, lam, lam], VOLUME_INDEX)


def structures(metric: Metric, gam: PhaseConnection, p: PhasePoint, **kw) -> PhaseStructures:
    return PhaseStructures(metric, gam, p, **kw)


# -- adapted phase frames and the (hbar, m) musical isomorphisms -------------------------

@dataclass(frozen=True)
class PhaseFrames:
    """Rows ``e_0, e_1..e_3, e0_1..e0_3`` and the dual rows ``eps^0, eps^i, eps^i_0``."""

    e: np.ndarray
    eps: np.ndarray


def adapted_phase_frames(s: PhaseStructures) -> PhaseFrames:
    q = s.q
    a2 = float(J.value(q.alpha2))
    dbar0, dbar = J.value(q.dbar0), J.value(q.dbar)
    gbar0 = J.value(q.gbar0)
    H = np.asarray(J.value(s.H))
    gam = np.asarray(J.value(s.Gamma))
    e0 = dbar0 @ H
    ei = (np.eye(4)[1:] + a2 * np.outer(gbar0[1:], dbar0)) @ H
    eps0 = -a2 * gbar0 @ E_X
    epsi = dbar @ E_X
    epsi0 = E_V - gam.T @ E_X
    return PhaseFrames(np.vstack([e0, ei, E_V]), np.vstack([eps0, epsi, epsi0]))


def full_sharp(s: PhaseStructures, form) -> np.ndarray:
    """``#(phi) = (hbar/(m c^4)) phi(gamma) gamma + Lambda#(phi)``."""
    gam = s.val("gamma")
    k = s.hbar / (s.mass * s.c ** 4)
    return k * float(np.asarray(form) @ gam) * gam + s.sharp(form)


def full_flat(s: PhaseStructures, vector) -> np.ndarray:
    """``flat(Y) = (m c^4/hbar) tau(Y) tau + Omega_flat(Y)``."""
    tau = s.val("tau")
    k = s.mass * s.c ** 4 / s.hbar
    return k * float(tau @ np.asarray(vector)) * tau + s.flat(vector)


# -- pullbacks of the spacetime 2-form through the contact map --------------------------

def _tangent_upsilon(weight: np.ndarray, K: np.ndarray, xdot: np.ndarray) -> np.ndarray:
    """Full components on the 8-dim tangent chart of ``w_{lm} (dot-d^l - K_n^l_r xdot^r d^n) ^ d^m``."""
    E8 = np.eye(8)
    B = E8[4:] - np.einsum("nlr,r,na->la", K, xdot, E8[:4])
    return expand_wedge(weight, B, E8[:4])


def contact_pullbacks(metric: Metric, K: LinearConnection, p: PhasePoint, c: float = 1.0) -> dict[str, np.ndarray]:
    """``d*Upsilon``, ``d*Upsilon_par`` and ``d*Upsilon_perp`` on the phase chart.

    The contact map ``(x, v) -> (x, c alpha dbar_0)`` is differentiated by
    jets; the parallel and orthogonal weights are ``-c^2 tau tau`` and
    ``g + c^2 tau tau`` evaluated at the point.
    """
    check_admissible(metric, p)
    z = J.Jet.seed(p.z, 1)
    q = PhaseQuantities(metric, z, c)
    jac = np.vstack([E_X, q.contact.grad.T])  # (8, 7)
    xdot = q.contact.val
    g = metric.components(p.x)
    tau = np.asarray(J.value(q.tau))
    Kx = K.coefficients(p.x)
    par = -c * c * np.outer(tau, tau)
    out = {}
    for name, w in (("full", g), ("par", par), ("perp", g - par)):
        out[name] = jac.T @ _tangent_upsilon(w, Kx, xdot) @ jac
    return out


# -- residuals and the classifier ------------------------------------------------------------

def _mx(a) -> float:
    a = np.asarray(J.value(a))
    return float(np.max(np.abs(a))) if a.size else 0.0


def volume_checks(s: PhaseStructures) -> dict[str, float]:
    """Top components of ``-c^2 tau ^ Omega^3`` and ``-(1/c^2) gamma ^ Lambda^3`` with their closed forms."""
    c, a = s.c, float(J.value(s.alpha))
    det_g = float(np.linalg.det(s.metric.components(s.point.x)))
    gbar_up = np.vstack([J.value(s.q.gbar_up0), J.value(s.q.gbar_upi)])
    det_gbar = float(np.linalg.det(gbar_up))
    return {
        "covariant_coeff": s.covariant_volume(),
        "covariant_expected": 6.0 * c ** 4 * a ** 4 * det_g,
        "contravariant_coeff": s.contravariant_volume(),
        "contravariant_expected": -6.0 / (c * a) ** 4 * det_gbar,
    }


def kernel_check(s: PhaseStructures) -> dict[str, float]:
    """Singular-value gap of ``Omega`` and alignment of its kernel with ``gamma``."""
    u, sv, vt = np.linalg.svd(s.val("omega"))
    k = vt[-1]
    gam = s.val("gamma")
    cos = abs(float(k @ gam)) / float(np.linalg.norm(gam))
    return {"gap": float(sv[-2] / max(sv[-1], 1e-300)), "kernel_alignment": 1.0 - cos}


TEST_VECTORS = np.eye(4)


def point_residuals(s: PhaseStructures) -> dict[str, float]:
    """Normalized residuals of every structure condition at one point."""
    c = s.c
    om, lam, gam, tau = s.val("omega"), s.val("lam"), s.val("gamma"), s.val("tau")
    n_om, n_lam, n_gam = _mx(om), _mx(lam), _mx(gam)
    d_tau = s.d_tau()
    gl = s.gamma_lambda()
    ll = s.lambda_lambda()
    gwl = s.gamma_wedge_lambda()
    n_gwl = (2.0 / c ** 2) * _mx(gwl)
    acpj_gamma = -gl / c ** 2 - wedge_array(gam, s.sharp(s.lie_gamma_of_tau())) / c ** 2
    acpj_lambda = ll - 2.0 * wedge_array(gam, s.sharp2(d_tau))
    lnu = max(_mx(s.lie_nu_lie_gamma_tau(X)) for X in TEST_VECTORS)
    vol = volume_checks(s)
    return {
        "d_omega": _mx(s.d_omega()) / n_om,
        "omega_exact": _mx(om + c * c * d_tau) / n_om,
        "lie_gamma_tau": c * c * _mx(s.lie_gamma_tau()) / n_om,
        "lie_R_tau": c * c * _mx(s.lie_R_tau()) / n_om,
        "lie_nu_lie_gamma_tau": c * c * lnu / n_om,
        "gamma_lambda": _mx(gl) / (n_gam * n_lam),
        "lambda_lambda": _mx(ll - (2.0 / c ** 2) * gwl) / n_gwl,
        "acpj_gamma": c * c * _mx(acpj_gamma) / (n_gam * n_lam),
        "acpj_lambda": _mx(acpj_lambda) / n_gwl,
        "i_gamma_omega": _mx(gam @ om) / (n_gam * n_om),
        "i_tau_lambda": _mx(tau @ lam) / (_mx(tau) * n_lam),
        "tau_gamma": abs(float(tau @ gam) - 1.0),
        "i_lambda_omega": abs(pair(lam, om) + 3.0) / 3.0,
        "volume_covariant": abs(vol["covariant_coeff"] - vol["covariant_expected"]) / abs(vol["covariant_expected"]),
        "volume_contravariant": abs(vol["contravariant_coeff"] - vol["contravariant_expected"])
        / abs(vol["contravariant_expected"]),
    }


FLAG_GROUPS = {
    "dual_pair": ("i_gamma_omega", "i_tau_lambda", "tau_gamma", "i_lambda_omega"),
    "acc": ("d_omega",),
    "contact": ("omega_exact",),
    "acpj": ("acpj_gamma", "acpj_lambda"),
    "jacobi": ("gamma_lambda", "lambda_lambda"),
}


@dataclass
class StructureVerdict:
    flags: dict[str, bool]
    residuals: dict[str, float]
    worst_points: dict[str, list[float]]
    tolerance: float
    points: int
    skipped: int = 0
    regular: bool = True

    def __post_init__(self):
        f = self.flags
        if f.get("contact") and not f.get("acc"):
            raise StructureConsistencyError("contact structure reported without ACC")
        if f.get("jacobi") and not f.get("acpj"):
            raise StructureConsistencyError("Jacobi structure reported without ACPJ")

    def groups_coherent(self) -> bool:
        """Simultaneous pass/fail of ``L_Gamma tau``, ``Omega + c^2 d tau`` and the bracket pair."""
        r, tol = self.residuals, self.tolerance
        groups = (
            r["lie_gamma_tau"] <= tol,
            r["omega_exact"] <= tol,
            max(r["gamma_lambda"], r["lambda_lambda"]) <= tol,
        )
        return all(groups) or not any(groups)


def classify_phase_structure(metric: Metric, gam: PhaseConnection, samples, tol: float = 1e-8,
                             c: float = 1.0, hbar: float = 1.0, mass: float = 1.0,
                             regularity_floor: float = 1e-6) -> StructureVerdict:
    """Evaluate every structure condition over ``samples`` and reduce by maximum."""
    samples = list(samples)
    if not samples:
        raise ValueError("classification needs at least one sample point")
    worst: dict[str, float] = {}
    where: dict[str, list[float]] = {}
    skipped = 0
    regular = True
    used = 0
    for p in samples:
        try:
            s = PhaseStructures(metric, gam, p, c=c, hbar=hbar, mass=mass)
        except (AdmissibilityError, ValueError):
            skipped += 1
            continue
        used += 1
        vol = volume_checks(s)
        regular &= abs(vol["covariant_coeff"]) > regularity_floor * abs(vol["covariant_expected"])
        for name, val in point_residuals(s).items():
            if name not in worst or val > worst[name]:
                worst[name], where[name] = val, [float(x) for x in p.z]
    if used == 0:
        raise ValueError("no admissible sample points")
    flags = {k: all(worst[n] <= tol for n in names) for k, names in FLAG_GROUPS.items()}
    for k in ("acc", "contact", "acpj", "jacobi"):
        flags[k] = flags[k] and flags["dual_pair"] and regular
    return StructureVerdict(flags, worst, where, tol, used, skipped, regular)


# -- spacetime condition equivalent to L_chi(K) tau = 0 ------------------------------------

def condition_c(metric: Metric, K: LinearConnection, x, X, Y, Z) -> float:
    """``g(Z,Z) V(X,Y)(Z) + 1/2 g(Z,X) (nabla_Y g)(Z,Z) - 1/2 g(Z,Y) (nabla_X g)(Z,Z)``

    with ``V = C - C^T`` the value of ``d_K g`` on ``(X, Y)`` in the halved
    evaluation convention.
    """
    from .spacetime import dK_g_coefficient, nabla_metric

    g = metric.components(x)
    C = dK_g_coefficient(K, metric, x)
    V = C - C.transpose(1, 0, 2)
    ng = nabla_metric(K, metric, x)
    X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
    zz = float(Z @ g @ Z)

    def nab(W):
        return float(np.einsum("l,lmn,m,n->", W, ng, Z, Z))

    return (zz * float(np.einsum("lmr,l,m,r->", V, X, Y, Z))
            + 0.5 * float(Z @ g @ X) * nab(Y) - 0.5 * float(Z @ g @ Y) * nab(X))


def lie_chi_tau_from_condition(metric: Metric, K: LinearConnection, p: PhasePoint, X, Y, c: float = 1.0) -> float:
    """``L_chi(K) tau (X, Y)`` predicted by the condition with ``Z = d`` (contact vector)."""
    from .kinematics import contact_map

    d = contact_map(metric, p, c)
    return condition_c(metric, K, p.x, X, Y, d) / c ** 4


def condition_c_residual(metric: Metric, K: LinearConnection, x, rng: np.random.Generator,
                         trials: int = 20) -> float:
    """Max of the condition over random ``X, Y, Z`` normalized by ``|g(Z,Z)| |C| |X||Y||Z|``."""
    from .spacetime import dK_g_coefficient

    scale = max(float(np.max(np.abs(dK_g_coefficient(K, metric, x)))), 1e-300)
    g = metric.components(x)
    worst = 0.0
    for _ in range(trials):
        X, Y, Z = rng.normal(size=(3, 4))
        norm = max(abs(float(Z @ g @ Z)), 1e-12) * np.linalg.norm(X) * np.linalg.norm(Y) * np.linalg.norm(Z)
        worst = max(worst, abs(condition_c(metric, K, x, X, Y, Z)) / (scale * norm))
    return worst
