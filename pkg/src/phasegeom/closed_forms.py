"""Closed-form coordinate expansions of the phase structures.

Each function rebuilds an object from the metric building blocks (barred and
hatted components, their first partials, ``Gamma`` and its partials) without
touching the generic exterior derivative or Schouten machinery, so comparing
the two routes is a genuine cross-check.  Results are full antisymmetric
arrays on the 7-dim phase chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet as J
from .structures import E_V, E_X, PhaseStructures, adapted_phase_frames, phase_curvature
from .tensor import expand_wedge


@dataclass(frozen=True)
class Blocks:
    """Values and first partials of the ingredients at one phase point.

    Derivative arrays carry the derivative index first; ``dx`` means the four
    ``d_l`` and ``dv`` the three ``d0_i``.
    """

    c: float
    alpha: float
    dbar0: np.ndarray
    dbar: np.ndarray
    g_up: np.ndarray
    gbar0: np.ndarray
    gbari: np.ndarray
    gbar_upi: np.ndarray
    ghat: np.ndarray
    ghat_up: np.ndarray
    d_ghat00: np.ndarray
    d_gbar0: np.ndarray
    d_gbari: np.ndarray
    d_gbar_upi: np.ndarray
    d_ghat_up: np.ndarray
    Gamma: np.ndarray
    dx_Gamma: np.ndarray
    dv_Gamma: np.ndarray
    R: np.ndarray
    gamma_fibre: np.ndarray
    dx_gamma_fibre: np.ndarray
    dv_gamma_fibre: np.ndarray


def blocks(s: PhaseStructures) -> Blocks:
    q = s.q

    def v(x):
        return np.asarray(J.value(x))

    def d(x):
        return np.asarray(x.grad)

    gam = s.Gamma
    gf = s.gamma_fibre
    return Blocks(
        c=s.c, alpha=float(v(q.alpha)), dbar0=v(q.dbar0), dbar=v(q.dbar), g_up=v(q.ginv),
        gbar0=v(q.gbar0), gbari=v(q.gbari), gbar_upi=v(q.gbar_upi), ghat=v(q.ghat), ghat_up=v(q.ghat_up),
        d_ghat00=d(q.ghat00), d_gbar0=d(q.gbar0), d_gbari=d(q.gbari), d_gbar_upi=d(q.gbar_upi),
        d_ghat_up=d(q.ghat_up),
        Gamma=gam.val, dx_Gamma=gam.grad[:4], dv_Gamma=gam.grad[4:],
        R=phase_curvature(s.connection, s.point),
        gamma_fibre=gf.val, dx_gamma_fibre=gf.grad[:4], dv_gamma_fibre=gf.grad[4:],
    )


def _H(b: Blocks) -> np.ndarray:
    return E_X + b.Gamma @ E_V


def _theta(b: Blocks) -> np.ndarray:
    return E_V - b.Gamma.T @ E_X


def _delta_spatial() -> np.ndarray:
    """``delta^l_p``: rows ``l``, columns fibre ``p``."""
    return np.eye(4)[:, 1:]


# -- covariant side -----------------------------------------------------------------

def d_omega(b: Blocks) -> np.ndarray:
    """Three-term expansion of ``d Omega`` through ``R[Gamma]``, ``d0 Gamma`` and ``d(alpha gbar)``."""
    c, a = b.c, b.alpha
    # d_l (alpha gbar_{i m}) and d0_i (alpha gbar_{j m}); d alpha = alpha^3 (d ghat00 / 2, gbar0i)
    dalpha_x = 0.5 * a ** 3 * b.d_ghat00[:4]
    dalpha_v = a ** 3 * b.gbar0[1:]
    dx_agb = np.einsum("l,im->lim", dalpha_x, b.gbari) + a * b.d_gbari[:4]
    dv_agb = np.einsum("i,jm->ijm", dalpha_v, b.gbari) + a * b.d_gbari[4:]
    first = 0.5 * c * a * np.einsum("jm,nlj->nlm", b.gbari, b.R)
    second = -c * (a * np.einsum("jm,ilj->ilm", b.gbari, b.dv_Gamma) + np.einsum("lim->ilm", dx_agb))
    third = c * dv_agb
    theta = _theta(b)
    return (expand_wedge(first, E_X, E_X, E_X)
            + expand_wedge(second, theta, E_X, E_X)
            + expand_wedge(third, E_V, theta, E_X))


def lie_gamma_tau(b: Blocks) -> np.ndarray:
    """``(alpha/c)(d_m gbar_{0l} - g_{jm} Gamma_l^j + alpha^2 gbar_{0l}(d_m ghat00/2 + gbar_{0p} Gamma_m^p)) d^l ^ d^m``."""
    a, c = b.alpha, b.c
    g = np.linalg.inv(b.g_up)
    coeff = (a / c) * (
        b.d_gbar0[:4].T
        - np.einsum("jm,lj->lm", g[1:], b.Gamma)
        + a * a * np.outer(b.gbar0, 0.5 * b.d_ghat00[:4] + b.Gamma @ b.gbar0[1:])
    )
    return expand_wedge(coeff, E_X, E_X)


def lie_R_tau(b: Blocks) -> np.ndarray:
    """``-(alpha/c) gbar_{i l} R_{m n}^i d^l ^ d^m ^ d^n``."""
    coeff = -(b.alpha / b.c) * np.einsum("il,mni->lmn", b.gbari, b.R)
    return expand_wedge(coeff, E_X, E_X, E_X)


def lie_nu_lie_gamma_tau(b: Blocks, X) -> np.ndarray:
    """``-(1/(c^2 alpha)) [d_l(alpha gbar_{i m}) + d0_i(alpha gbar_{j m} Gamma_l^j)] Xt^i d^l ^ d^m``."""
    a, c = b.alpha, b.c
    X = np.asarray(X, dtype=float)
    xt = b.dbar @ X
    dalpha_x = 0.5 * a ** 3 * b.d_ghat00[:4]
    dalpha_v = a ** 3 * b.gbar0[1:]
    dx_agb = np.einsum("l,im->lim", dalpha_x, b.gbari) + a * b.d_gbari[:4]
    dv_agb = np.einsum("i,jm->ijm", dalpha_v, b.gbari) + a * b.d_gbari[4:]
    # d0_i (alpha gbar_{jm} Gamma_l^j)
    dv_term = np.einsum("ijm,lj->ilm", dv_agb, b.Gamma) + a * np.einsum("jm,ilj->ilm", b.gbari, b.dv_Gamma)
    coeff = -(1.0 / (c * c * a)) * np.einsum("ilm,i->lm", np.einsum("lim->ilm", dx_agb) + dv_term, xt)
    return expand_wedge(coeff, E_X, E_X)


# -- contravariant side -------------------------------------------------------------

def _half_dghat_plus(b: Blocks) -> np.ndarray:
    """``(1/2) d_r ghat00 + gbar_{0p} Gamma_r^p`` indexed by ``r``."""
    return 0.5 * b.d_ghat00[:4] + b.Gamma @ b.gbar0[1:]


def gamma_lambda_general(b: Blocks) -> np.ndarray:
    """``[gamma, Lambda]`` for an arbitrary dynamical connection with fibre components ``gamma^i``."""
    a2 = b.alpha ** 2
    gu, db0, gam, gf = b.gbar_upi, b.dbar0, b.Gamma, b.gamma_fibre
    dgh = b.d_ghat00[:4]
    g0p = b.gbar0[1:]
    # coefficient of H_l ^ d0_j, indexed [l, j]
    A = (-a2 * (0.5 * gu.T * (db0 @ dgh) + gu.T * (gf @ g0p) + np.outer(db0, gf))
         - 2.0 * np.outer(b.g_up[0], gf)
         + np.einsum("r,rjl->lj", db0, b.d_gbar_upi[:4])
         - np.einsum("pl,pj->lj", gu, b.dv_gamma_fibre))
    # coefficient of d_l ^ d0_j
    B = (-a2 * (0.5 * np.outer(db0, gu @ dgh) + np.outer(db0, gu @ gam @ g0p) - np.outer(db0, db0 @ gam))
         + b.g_up @ gam
         - _delta_spatial() @ (gu @ gam).T)
    # coefficient of d0_i ^ d0_j
    C = (-a2 * (0.5 * np.outer(gf, gu @ dgh) + np.outer(gf, gu @ gam @ g0p))
         + np.einsum("jl,r,rli->ij", gu, db0, b.dx_Gamma)
         + np.einsum("jl,p,pli->ij", gu, gf, b.dv_Gamma)
         - np.einsum("jl,li->ij", gu, b.dx_gamma_fibre)
         + np.einsum("il,lp,pj->ij", gu, gam, b.dv_gamma_fibre))
    H = _H(b)
    return expand_wedge(A, H, E_V) + expand_wedge(B, E_X, E_V) + expand_wedge(C, E_V, E_V)


def gamma_lambda(b: Blocks) -> np.ndarray:
    """``[gamma[Gamma], Lambda]`` in the compact form with the curvature term."""
    a2 = b.alpha ** 2
    gu, db0, gam = b.gbar_upi, b.dbar0, b.Gamma
    w = _half_dghat_plus(b)
    A = (-a2 * (np.einsum("jl,r,r->lj", gu, db0, w) + np.einsum("jr,l,r->lj", gu, db0, w))
         - _delta_spatial() @ (gu @ gam).T
         + np.einsum("r,rjl->lj", db0, b.d_gbar_upi[:4])
         - np.outer(b.g_up[0], db0 @ gam)
         - np.einsum("pl,r,prj->lj", gu, db0, b.dv_Gamma))
    C = np.einsum("jl,r,lri->ij", gu, db0, b.R)
    return expand_wedge(A, _H(b), E_V) + expand_wedge(C, E_V, E_V)


def gamma_lambda_adapted(s: PhaseStructures, b: Blocks) -> np.ndarray:
    """``[gamma, Lambda]`` in the adapted frame ``(e_0, e_i, e0_i)``."""
    e = adapted_phase_frames(s).e
    e0, ei, ev = e[0], e[1:4], e[4:]
    a2 = b.alpha ** 2
    gu, db0, gam = b.gbar_upi, b.dbar0, b.Gamma
    w = _half_dghat_plus(b)
    P = -a2 * (0.5 * gu @ b.d_ghat00[:4]
               + np.einsum("l,r,rjl->j", b.gbar0, db0, b.d_gbar_upi[:4])
               - db0 @ gam)
    Q = -(a2 * b.ghat_up * (db0 @ w)
          + (gu @ gam).T
          - (np.einsum("r,rji->ij", db0, b.d_ghat_up[:4])
             - np.outer(gu[:, 0], db0 @ gam)
             - np.einsum("pi,r,prj->ij", b.ghat_up, db0, b.dv_Gamma)))
    C = np.einsum("jl,r,lri->ij", gu, db0, b.R)
    return (expand_wedge(P[None, :], e0[None, :], ev) + expand_wedge(Q, ei, ev)
            + expand_wedge(C, ev, ev))


def gamma_wedge_lambda(b: Blocks) -> np.ndarray:
    """``gamma ^ Lambda`` expanded in ``d_l`` and ``d0_i``."""
    gu, db0, gam = b.gbar_upi, b.dbar0, b.Gamma
    first = np.einsum("l,im->lmi", db0, gu)
    second = np.einsum("l,jr,ri->lij", db0, gu, gam) - np.einsum("r,jl,ri->lij", db0, gu, gam)
    third = np.einsum("r,ks,ri,sj->ijk", db0, gu, gam, gam)
    return (expand_wedge(first, E_X, E_X, E_V) + expand_wedge(second, E_X, E_V, E_V)
            + expand_wedge(third, E_V, E_V, E_V))


def lambda_lambda(b: Blocks) -> np.ndarray:
    """``[Lambda, Lambda]`` expanded in ``d_l`` and ``d0_i``."""
    c, a2 = b.c, b.alpha ** 2
    gu, db0, gam = b.gbar_upi, b.dbar0, b.Gamma
    w = _half_dghat_plus(b)
    k = 2.0 / (c * c)
    first = np.einsum("l,jm->lmj", db0, gu)
    # [l, i, j]
    second = (np.einsum("ir,jl,r->lij", gu, gu, w)
              + np.einsum("l,jr,ri->lij", db0, gu, gam) - np.einsum("r,jl,ri->lij", db0, gu, gam)
              + (1.0 / a2) * (np.einsum("jr,ril->lij", gu, b.d_gbar_upi[:4])
                              - np.einsum("jr,l,ri->lij", gu, b.g_up[0], gam)
                              - np.einsum("jr,pl,pri->lij", gu, gu, b.dv_Gamma)))
    # [i, j, k]
    third = (np.einsum("is,jr,rk,s->ijk", gu, gu, gam, w)
             + np.einsum("s,kr,si,rj->ijk", db0, gu, gam, gam)
             + (1.0 / a2) * (-0.5 * np.einsum("is,kr,srj->ijk", gu, gu, b.R)
                             + np.einsum("is,rj,skr->ijk", gu, gam, b.d_gbar_upi[:4])
                             - np.einsum("is,rj,r,sk->ijk", gu, gam, b.g_up[0], gam)
                             - np.einsum("is,rj,pr,psk->ijk", gu, gam, gu, b.dv_Gamma)))
    return k * (expand_wedge(first, E_X, E_X, E_V) + expand_wedge(second, E_X, E_V, E_V)
                + expand_wedge(third, E_V, E_V, E_V))


def lambda_lambda_adapted(s: PhaseStructures, b: Blocks) -> np.ndarray:
    """``[Lambda, Lambda]`` in the adapted frame."""
    e = adapted_phase_frames(s).e
    e0, ei, ev = e[0], e[1:4], e[4:]
    c, a2 = b.c, b.alpha ** 2
    gu, gam = b.gbar_upi, b.Gamma
    w = _half_dghat_plus(b)
    first = b.ghat_up.T  # [j, k]
    second = (gu @ gam).T - np.einsum("l,kr,rjl->jk", b.gbar0, gu, b.d_gbar_upi[:4])
    third = (np.einsum("ki,jr,r->ijk", b.ghat_up, gu, w)
             + (1.0 / a2) * (np.einsum("kr,rji->ijk", gu, b.d_ghat_up[:4])
                             - np.einsum("kr,i,rj->ijk", gu, gu[:, 0], gam)
                             - np.einsum("kr,pi,prj->ijk", gu, b.ghat_up, b.dv_Gamma)))
    fourth = (0.5 / a2) * np.einsum("ir,js,rsk->ijk", gu, gu, b.R)
    out = (expand_wedge(first[None], e0[None], ei, ev) + expand_wedge(second[None], e0[None], ev, ev)
           + expand_wedge(third, ei, ev, ev) + expand_wedge(fourth, ev, ev, ev))
    return (2.0 / (c * c)) * out


def sharp2_dtau(b: Blocks) -> np.ndarray:
    """``(Lambda# (x) Lambda#)(d tau)``."""
    gu, gam = b.gbar_upi, b.Gamma
    k = 1.0 / (b.c ** 3 * b.alpha)
    A = gu.T
    M = (np.einsum("il,jm,lm->ij", gu, gu, b.d_gbar0[:4])
         + gu @ gam - (gu @ gam).T)
    return k * (expand_wedge(A, E_X, E_V) - expand_wedge(M, E_V, E_V))


def gamma_wedge_sharp_lie_tau(s: PhaseStructures, b: Blocks) -> np.ndarray:
    """``gamma ^ Lambda#(L_gamma tau) = alpha^2 W^j e_0 ^ d0_j``."""
    e0 = adapted_phase_frames(s).e[0]
    W = (0.5 * b.gbar_upi @ b.d_ghat00[:4]
         + np.einsum("r,s,sjr->j", b.gbar0, b.dbar0, b.d_gbar_upi[:4])
         - b.dbar0 @ b.Gamma)
    return b.alpha ** 2 * expand_wedge(W[None, :], e0[None, :], E_V)


# -- musical images and pullbacks -----------------------------------------------------

def sharp_images(b: Blocks) -> np.ndarray:
    """Rows ``Lambda#(d^l)`` then ``Lambda#(d^i_0)``."""
    ca = b.c * b.alpha
    gu, gam = b.gbar_upi, b.Gamma
    rows_x = (gu.T @ E_V) / ca
    vert = np.einsum("jr,ri->ij", gu, gam) - np.einsum("ir,rj->ij", gu, gam)
    rows_v = (-gu @ E_X + vert @ E_V) / ca
    return np.vstack([rows_x, rows_v])


def flat_vertical_images(b: Blocks) -> np.ndarray:
    """Rows ``Omega_flat(d0_i) = c alpha gbar_{i m} d^m``."""
    return b.c * b.alpha * b.gbari @ E_X


def pullback_closed(metric, K, s: PhaseStructures, b: Blocks) -> dict[str, np.ndarray]:
    """Closed forms of ``d*Upsilon``, ``d*Upsilon_par``, ``d*Upsilon_perp``."""
    c, a = b.c, b.alpha
    x = s.point.x
    g = metric.components(x)
    Kx = K.coefficients(x)
    Kd = np.einsum("nlr,r->nl", Kx, b.dbar0)  # K_n^l_r dbar^r
    dgh = b.d_ghat00[:4]
    full_v = c * a * b.gbari
    full_x = c * a * (0.5 * a * a * np.outer(dgh, b.gbar0) - Kd @ g)
    par = c * a ** 3 * (0.5 * np.outer(dgh, b.gbar0) + np.outer(Kd @ b.gbar0, b.gbar0))
    perp_basis = E_V - np.einsum("il,nl,na->ia", b.dbar, Kd, E_X)
    return {
        "full": expand_wedge(full_v, E_V, E_X) + expand_wedge(full_x, E_X, E_X),
        "par": expand_wedge(par, E_X, E_X),
        "perp": expand_wedge(b.c * b.alpha * b.gbari, perp_basis, E_X),
    }
