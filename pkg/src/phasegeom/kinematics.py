"""Phase chart ``(x^l; x^i_0)``: normalization, contact map, time form and adapted frames.

All barred and hatted metric quantities are computed by :func:`PhaseQuantities`
on jets over the 7 phase coordinates, so the same code supplies values for the
identity suites and exact derivatives for the phase structures.

Index layout: ``gbar0[l] = gbar_{0l}``, ``gbari[i, l] = gbar_{il}``,
``gbar_up0[l] = gbar^{0l}``, ``gbar_upi[i, l] = gbar^{il}``,
``dbar0[l] = dbar^l_0``, ``dbar[i, m] = dbar^i_m`` (fibre indices ``i = 0..2``
stand for ``1..3``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet as J
from .metrics import Metric


class AdmissibilityError(ValueError):
    """The phase point is not timelike."""


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(4))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])

    @classmethod
    def from_z(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        return cls(z[:4], z[4:])


def velocity_norm(metric: Metric, p: PhasePoint) -> float:
    """``g00 + 2 g0j v^j + gij v^i v^j``."""
    g = metric.components(p.x)
    d = np.concatenate([[1.0], p.v])
    return float(d @ g @ d)


def check_admissible(metric: Metric, p: PhasePoint) -> None:
    metric.check_domain(p.x)
    if not velocity_norm(metric, p) < 0.0:
        raise AdmissibilityError(f"phase point {p.z} is not timelike")


# -- jets of the phase quantities ------------------------------------------------

def phase_seed(p: PhasePoint, order: int = 2) -> J.Jet:
    return J.Jet.seed(p.z, order)


def dbar_arrays(v):
    """``dbar^l_0 = (1, v)`` and ``dbar^i_m = delta^i_m - delta^0_m v^i``."""
    if isinstance(v, J.Jet):
        one = v[0] * 0.0 + 1.0
        dbar0 = J.stack([one, v[0], v[1], v[2]])
        zero = v[0] * 0.0
        rows = []
        for i in range(3):
            rows.append(J.stack([-1.0 * v[i]] + [zero + (1.0 if j == i else 0.0) for j in range(3)]))
        return dbar0, J.stack(rows)
    v = np.asarray(v, dtype=float)
    dbar0 = np.concatenate([[1.0], v])
    dbar = np.hstack([-v[:, None], np.eye(3)])
    return dbar0, dbar


class PhaseQuantities:
    """Barred/hatted metric data at a phase point, as jets or plain arrays."""

    def __init__(self, metric: Metric, z, c: float = 1.0):
        self.c = float(c)
        x = z[:4]
        v = z[4:]
        self.g = metric.jet(x) if isinstance(z, J.Jet) else metric.components(x)
        self.ginv = J.inv(self.g)
        self.dbar0, self.dbar = dbar_arrays(v)
        self.gbar0 = J.einsum("lm,m->l", self.g, self.dbar0)
        self.ghat00 = J.einsum("l,l->", self.gbar0, self.dbar0)
        if np.any(J.value(self.ghat00) >= 0.0):
            raise AdmissibilityError("phase point is not timelike")
        self.alpha = (-1.0 * self.ghat00) ** -0.5
        self.alpha2 = self.alpha * self.alpha
        gi = self.g[1:] if isinstance(self.g, J.Jet) else self.g[1:]
        self.gbari = gi + self.alpha2 * J.einsum("i,l->il", self.gbar0[1:], self.gbar0)
        self.ghat = self.gbari[:, 1:]
        self.gbar_up0 = self.alpha2 * self.dbar0 * -1.0
        self.gbar_upi = J.einsum("ir,rl->il", self.dbar, self.ginv)
        self.ghat_up = J.einsum("il,jl->ij", self.gbar_upi, self.dbar)
        self.ghat_up00 = self.alpha2 * -1.0
        self.tau = self.gbar0 * (self.alpha * (-1.0 / self.c))
        self.contact = self.dbar0 * (self.alpha * self.c)


def quantities(metric: Metric, p: PhasePoint, c: float = 1.0) -> PhaseQuantities:
    check_admissible(metric, p)
    return PhaseQuantities(metric, p.z, c)


# -- point operations ----------------------------------------------------------------

def alpha0(metric: Metric, p: PhasePoint) -> float:
    check_admissible(metric, p)
    return 1.0 / np.sqrt(abs(velocity_norm(metric, p)))


def contact_map(metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    return c * alpha0(metric, p) * np.concatenate([[1.0], p.v])


def time_form(metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    g = metric.components(p.x)
    return -(alpha0(metric, p) / c) * (g[0] + p.v @ g[1:])


def theta(metric: Metric, p: PhasePoint, c: float = 1.0) -> np.ndarray:
    """``theta^m_l = delta^m_l - d^m tau_l`` as a matrix acting on vectors."""
    return np.eye(4) - np.outer(contact_map(metric, p, c), time_form(metric, p, c))


@dataclass(frozen=True)
class Projections:
    """Endomorphisms ``pi_par``, ``pi_perp`` (on vectors) and their transposes (on covectors)."""

    par: np.ndarray
    perp: np.ndarray
    par_co: np.ndarray
    perp_co: np.ndarray


def projections(metric: Metric, p: PhasePoint, c: float = 1.0) -> Projections:
    d, t = contact_map(metric, p, c), time_form(metric, p, c)
    par = np.outer(d, t)
    perp = np.eye(4) - par
    return Projections(par, perp, par.T, perp.T)


@dataclass(frozen=True)
class AdaptedFrames:
    """Adapted bases and the barred/hatted metric data at one phase point.

    Rows of ``b`` are ``b_0, b_1, b_2, b_3`` (vector components); rows of
    ``beta`` are ``beta^0, beta^i`` (covector components).
    """

    b: np.ndarray
    beta: np.ndarray
    alpha: float
    gbar0: np.ndarray
    gbari: np.ndarray
    ghat00: float
    ghatij: np.ndarray
    gbar_up0: np.ndarray
    gbar_upi: np.ndarray
    ghat_up00: float
    ghat_upij: np.ndarray
    deltabar0: np.ndarray
    deltabar: np.ndarray


def adapted_frames(metric: Metric, p: PhasePoint, c: float = 1.0) -> AdaptedFrames:
    q = quantities(metric, p, c)
    a = float(q.alpha)
    tau = q.tau
    b0 = q.dbar0
    bi = np.eye(4)[1:] - c * a * np.outer(tau[1:], b0)
    beta0 = np.eye(4)[0] + c * a * tau[1:] @ q.dbar
    return AdaptedFrames(
        b=np.vstack([b0, bi]),
        beta=np.vstack([beta0, q.dbar]),
        alpha=a,
        gbar0=q.gbar0,
        gbari=q.gbari,
        ghat00=float(q.ghat00),
        ghatij=q.ghat,
        gbar_up0=q.gbar_up0,
        gbar_upi=q.gbar_upi,
        ghat_up00=float(q.ghat_up00),
        ghat_upij=q.ghat_up,
        deltabar0=q.dbar0,
        deltabar=q.dbar,
    )


def hat_metric(fr: AdaptedFrames) -> tuple[np.ndarray, np.ndarray]:
    """Block matrices ``ghat_{ab}`` and ``ghat^{ab}`` over ``(0, i)``."""
    lo = np.zeros((4, 4))
    up = np.zeros((4, 4))
    lo[0, 0], lo[1:, 1:] = fr.ghat00, fr.ghatij
    up[0, 0], up[1:, 1:] = fr.ghat_up00, fr.ghat_upij
    return lo, up


def useful_identities(metric: Metric, p: PhasePoint, c: float = 1.0) -> dict[str, float]:
    """Residuals of the technical identities between barred and hatted quantities.

    Algebraic identities use plain values; the last two use exact phase derivatives.
    """
    fr = adapted_frames(metric, p, c)
    g = metric.components(p.x)
    gi = np.linalg.inv(g)
    a2 = fr.alpha ** 2
    b, beta = fr.b, fr.beta
    g0, gI = fr.gbar0, fr.gbari
    u0, uI = fr.gbar_up0, fr.gbar_upi
    d0, dI = fr.deltabar0, fr.deltabar
    hat_lo, hat_up = hat_metric(fr)
    h00 = fr.ghat00
    res = {
        "gbar0_d = ghat00 beta0": g0 - h00 * beta[0],
        "gbari_d = ghatij betaj": gI - fr.ghatij @ beta[1:],
        "gbar_up0_del = ghat_up00 b0": u0 - fr.ghat_up00 * b[0],
        "gbar_upi_del = ghat_upij bj": uI - fr.ghat_upij @ b[1:],
        "gbari_l gbar_upi_m": gI.T @ uI - (np.eye(4) + a2 * np.outer(g0, d0)),
        "gbar0i gbar_upi": g0[1:] @ uI - (d0 - h00 * gi[0]),
        "gbari_m g^0m": gI @ gi[0] - a2 * g0[1:],
        "gbar0_n gbar_upi_n": uI @ g0,
        "gbari_n gbar_up0_n": gI @ u0,
        "gbari_n dbar0_n": gI @ d0,
        "gbari_m dbar_i_l": dI.T @ gI - (g + a2 * np.outer(g0, g0)),
        "gbar_upi_l dbar_j_l": uI @ dI.T - fr.ghat_upij,
        "ghat_up ghat_lo": np.concatenate([(hat_up @ hat_lo.T - np.eye(4)).ravel(),
                                            (hat_up.T @ hat_lo - np.eye(4)).ravel()]),
        "ghat_upij ghat_jh": np.concatenate([(fr.ghat_upij @ fr.ghatij.T - np.eye(3)).ravel(),
                                              (fr.ghat_upij.T @ fr.ghatij - np.eye(3)).ravel()]),
        "ghat_upij g_js": fr.ghat_upij @ g[1:] - (dI - np.outer(uI[:, 0], g0)),
        "ghat_upij delta_j_r": fr.ghat_upij @ np.eye(4)[1:] - (uI - np.outer(uI[:, 0], d0)),
        "gbar0_n dbar0_n": np.array([g0 @ d0 - h00]),
        "ghat_upij gbar0j": fr.ghat_upij @ g0[1:] + h00 * uI[:, 0],
    }
    out = {k: float(np.max(np.abs(v))) for k, v in res.items()}
    # derivative identities
    qj = PhaseQuantities(metric, phase_seed(p, 1), c)
    dalpha = qj.alpha.grad
    dh00 = qj.ghat00.grad
    scale = max(1.0, fr.alpha ** 3)
    out["d0_i alpha = alpha^3 gbar0i"] = float(np.max(np.abs(dalpha[4:] - fr.alpha ** 3 * g0[1:]))) / scale
    out["d_l alpha = alpha^3 d_l ghat00 / 2"] = float(np.max(np.abs(dalpha[:4] - 0.5 * fr.alpha ** 3 * dh00[:4]))) / scale
    return out


ALGEBRAIC_IDENTITY_COUNT = 18
DERIVATIVE_IDENTITIES = ("d0_i alpha = alpha^3 gbar0i", "d_l alpha = alpha^3 d_l ghat00 / 2")


def frame_duality(metric: Metric, p: PhasePoint, c: float = 1.0) -> dict[str, float]:
    fr = adapted_frames(metric, p, c)
    g = metric.components(p.x)
    a = fr.alpha
    tau = time_form(metric, p, c)
    inv_b = c * a * np.outer(tau, fr.b[0]) + fr.deltabar.T @ fr.b[1:]
    inv_d = np.outer(fr.deltabar0, fr.beta[0] - c * a * tau[1:] @ fr.beta[1:]) + np.eye(4)[:, 1:] @ fr.beta[1:]
    gb = fr.b @ g @ fr.b.T
    gbeta = fr.beta @ np.linalg.inv(g) @ fr.beta.T
    return {
        "beta(b) = delta": float(np.max(np.abs(fr.beta @ fr.b.T - np.eye(4)))),
        "d_l = c a tau_l b0 + dbar_i_l b_i": float(np.max(np.abs(inv_b - np.eye(4)))),
        "d^m = dbar0 (beta0 - c a tau_j beta^j) + beta^m": float(np.max(np.abs(inv_d - np.eye(4)))),
        "ghat_0j = 0": float(np.max(np.abs(gb[0, 1:]))),
        "ghat^0j = 0": float(np.max(np.abs(gbeta[0, 1:]))),
        "ghat00 = -1/alpha^2": abs(gb[0, 0] + 1.0 / a ** 2) * a ** 2,
        "ghat^00 = -alpha^2": abs(gbeta[0, 0] + a ** 2) / a ** 2,
    }


def projector_algebra(metric: Metric, p: PhasePoint, c: float = 1.0) -> dict[str, float]:
    g = metric.components(p.x)
    gi = np.linalg.inv(g)
    d, tau = contact_map(metric, p, c), time_form(metric, p, c)
    pr = projections(metric, p, c)
    th = theta(metric, p, c)
    fr = adapted_frames(metric, p, c)
    a2 = fr.alpha ** 2
    closed_par = -a2 * np.outer(fr.deltabar0, fr.gbar0)
    closed_perp = fr.gbar_upi.T @ fr.gbari
    g_par = pr.par.T @ g @ pr.par
    g_perp = pr.perp.T @ g @ pr.perp
    gi_par = pr.par @ gi @ pr.par.T
    gi_perp = pr.perp @ gi @ pr.perp.T
    checks = {
        "theta idempotent": th @ th - th,
        "theta(d) = 0": th @ d,
        "theta + d tau = 1": th + np.outer(d, tau) - np.eye(4),
        "pi_par + pi_perp = 1": pr.par + pr.perp - np.eye(4),
        "pi_par(d) = d": pr.par @ d - d,
        "orthogonal images": pr.par.T @ g @ pr.perp,
        "g_par = -c^2 tau tau": g_par + c * c * np.outer(tau, tau),
        "g_perp = g + c^2 tau tau": g_perp - (g + c * c * np.outer(tau, tau)),
        "gbar_par = -d d / c^2": gi_par + np.outer(d, d) / (c * c),
        "gbar_perp = gbar + d d / c^2": gi_perp - (gi + np.outer(d, d) / (c * c)),
        "pi_par closed form": closed_par - pr.par,
        "pi_perp closed form": closed_perp - pr.perp,
        "g_perp closed form": g_perp - (g + a2 * np.outer(fr.gbar0, fr.gbar0)),
        "gbar_perp closed form": gi_perp - (gi + a2 * np.outer(fr.deltabar0, fr.deltabar0)),
        "rank theta = 3": np.array([np.linalg.matrix_rank(th) - 3.0]),
    }
    scale = max(1.0, float(np.max(np.abs(g))), float(np.max(np.abs(np.outer(d, d)))))
    return {k: float(np.max(np.abs(v))) / scale for k, v in checks.items()}


# -- vertical isomorphism ---------------------------------------------------------------

def nu_tau(metric: Metric, p: PhasePoint, X, c: float = 1.0) -> np.ndarray:
    """Fibre components of ``nu_tau(X) = (1/(c a)) Xtilde^i d0_i``."""
    a = alpha0(metric, p)
    X = np.asarray(X, dtype=float)
    return (X[1:] - p.v * X[0]) / (c * a)


def nu_tau_inv(metric: Metric, p: PhasePoint, Y, c: float = 1.0) -> np.ndarray:
    """Spacetime components of ``c a Y^i b_i``."""
    fr = adapted_frames(metric, p, c)
    return c * fr.alpha * np.asarray(Y, dtype=float) @ fr.b[1:]


# -- covariant derivatives of barred and hatted quantities --------------------------

def nabla_barred(metric: Metric, K, p: PhasePoint, c: float = 1.0) -> dict[str, np.ndarray]:
    """Both sides of the covariant-derivative formulas for barred and hatted components.

    Each key maps to ``(definition, closed)``: the definition contracts
    ``nabla g`` with the adapted frames, the closed side expands it in partials.
    Arrays carry the derivative index ``l`` first.
    """
    from .spacetime import nabla_inverse_metric, nabla_metric

    fr = adapted_frames(metric, p, c)
    x = p.x
    ng = nabla_metric(K, metric, x)
    ngi = nabla_inverse_metric(K, metric, x)
    k = K.coefficients(x)
    gj = metric.provider.jet(x, order=1)
    g, dg = gj.val, gj.grad
    gij = J.inv(gj)
    gi, dgi = gij.val, gij.grad
    a2 = fr.alpha ** 2
    b, beta = fr.b, fr.beta
    d0, dI = fr.deltabar0, fr.deltabar
    g0, gI = fr.gbar0, fr.gbari
    uI = fr.gbar_upi

    # definitions
    def_g0 = np.einsum("n,lnm->lm", b[0], ng)
    def_gi = np.einsum("in,lnm->lim", b[1:], ng)
    def_u0 = np.einsum("n,lnm->lm", beta[0], ngi)
    def_ui = np.einsum("in,lnm->lim", beta[1:], ngi)
    def_h00 = np.einsum("n,m,lnm->l", b[0], b[0], ng)
    def_hi0 = np.einsum("in,m,lnm->li", b[1:], b[0], ng)
    def_hij = np.einsum("in,jm,lnm->lij", b[1:], b[1:], ng)
    def_hu00 = np.einsum("n,m,lnm->l", beta[0], beta[0], ngi)
    def_hui0 = np.einsum("in,m,lnm->li", beta[1:], beta[0], ngi)
    def_huij = np.einsum("in,jm,lnm->lij", beta[1:], beta[1:], ngi)

    # closed forms (partials of barred quantities at fixed velocity)
    d_g0 = np.einsum("lnm,n->lm", dg, d0)
    pr_g0 = d_g0 + np.einsum("rm,lrs,s->lm", g, k, d0) + np.einsum("r,lrm->lm", g0, k)
    pr_gi = ng[:, 1:, :] + a2 * np.einsum("i,lm->lim", g0[1:], pr_g0)
    pr_u0 = -a2 * np.einsum("n,lnm->lm", g0, dgi - np.einsum("rm,lnr->lnm", gi, k) - np.einsum("nr,lmr->lnm", gi, k))
    d_ui = np.einsum("in,lnm->lim", dI, dgi)
    pr_ui = d_ui - np.einsum("in,rm,lnr->lim", dI, gi, k) - np.einsum("ir,lmr->lim", uI, k)
    d_h00 = np.einsum("lnm,n,m->l", dg, d0, d0)
    pr_h00 = d_h00 + 2.0 * np.einsum("r,lrs,s->l", g0, k, d0)
    pr_hi0 = pr_g0[:, 1:] + a2 * np.einsum("i,l->li", g0[1:], pr_h00)
    pr_hij = (ng[:, 1:, 1:] + a2 * (np.einsum("i,lj->lij", g0[1:], pr_g0[:, 1:]) + np.einsum("j,li->lij", g0[1:], pr_g0[:, 1:]))
              + a2 * a2 * np.einsum("i,j,l->lij", g0[1:], g0[1:], pr_h00))
    pr_hu00 = a2 * a2 * (np.einsum("n,m,lnm->l", g0, g0, dgi) - 2.0 * np.einsum("s,r,lsr->l", g0, d0, k))
    pr_hui0 = -a2 * np.einsum("m,lim->li", g0, pr_ui)
    d_huij = np.einsum("in,jm,lnm->lij", dI, dI, dgi)
    pr_huij = d_huij - np.einsum("jr,is,lsr->lij", uI, dI, k) - np.einsum("ir,js,lsr->lij", uI, dI, k)

    pairs = {
        "nabla gbar_0m": (def_g0, pr_g0),
        "nabla gbar_im": (def_gi, pr_gi),
        "nabla gbar^0m": (def_u0, pr_u0),
        "nabla gbar^im": (def_ui, pr_ui),
        "nabla ghat_00": (def_h00, pr_h00),
        "nabla ghat_i0": (def_hi0, pr_hi0),
        "nabla ghat_ij": (def_hij, pr_hij),
        "nabla ghat^00": (def_hu00, pr_hu00),
        "nabla ghat^i0": (def_hui0, pr_hui0),
        "nabla ghat^ij": (def_huij, pr_huij),
        # paired identities
        "gbar_0m nabla gbar^0m": (np.einsum("m,lm->l", g0, def_u0), -np.einsum("m,lm->l", fr.gbar_up0, def_g0)),
        "gbar_0m nabla gbar^im": (np.einsum("m,lim->li", g0, def_ui), -np.einsum("im,lm->li", uI, def_g0)),
        "gbar_im nabla gbar^0m": (np.einsum("im,lm->li", gI, def_u0), -np.einsum("m,lim->li", fr.gbar_up0, def_gi)),
        "gbar_im nabla gbar^jm": (np.einsum("im,ljm->lij", gI, def_ui), -np.einsum("jm,lim->lij", uI, def_gi)),
    }
    return pairs


def nabla_barred_residuals(metric: Metric, K, p: PhasePoint, c: float = 1.0) -> dict[str, float]:
    out = {}
    for key, (lhs, rhs) in nabla_barred(metric, K, p, c).items():
        scale = max(1.0, float(np.max(np.abs(lhs))))
        out[key] = float(np.max(np.abs(lhs - rhs))) / scale
    return out


# -- sampling ------------------------------------------------------------------------------

def counter_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_phase_points(metric: Metric, count: int, seed: int = 0, *, radius: float = 0.7,
                        c: float = 1.0, max_alpha: float = 1e3, ranges=None,
                        max_tries_factor: int = 10) -> tuple[list[PhasePoint], int]:
    """Deterministic admissible phase points; returns the points and the rejection count.

    Velocities are drawn uniformly in a ball of ``radius`` in the frame of the
    static observer, ``v^i = w^i sqrt(|g_00| / g_ii)``; points outside the
    metric domain, non-timelike points and points with ``alpha0 > max_alpha``
    are rejected, with at most ``max_tries_factor * count`` draws.
    """
    rng = counter_rng(seed)
    ranges = ranges or metric.ranges
    pts: list[PhasePoint] = []
    rejected = 0
    for _ in range(max_tries_factor * count):
        if len(pts) == count:
            break
        x = np.array([rng.uniform(lo, hi) for lo, hi in ranges])
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        w = direction * radius * rng.uniform() ** (1.0 / 3.0)
        try:
            metric.check_domain(x)
            g = metric.components(x)
            p = PhasePoint(x, w * np.sqrt(abs(g[0, 0]) / np.abs(np.diag(g)[1:])))
            a = alpha0(metric, p)
        except ValueError:
            rejected += 1
            continue
        d = contact_map(metric, p, c)
        norm = float(d @ metric.components(x) @ d) / (-c * c)
        if a > max_alpha or not 0.999 <= norm <= 1.001:
            rejected += 1
            continue
        pts.append(p)
    return pts, rejected
