"""Batch runner: configuration in, :class:`Report` out."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from . import closed_forms as CF
from . import kinematics as KIN
from . import perturbations as PT
from . import spacetime as ST
from . import structures as SS
from .config import RunConfig, validate
from .metrics import Metric, build_metric
from .report import Report, Row

__all__ = ["NoSamplesError", "build_connections", "run"]


class NoSamplesError(RuntimeError):
    """No admissible sample point could be drawn."""


# -- construction from the configuration ------------------------------------------------------

def _spacetime_connection(cfg: RunConfig, metric: Metric) -> ST.LinearConnection:
    conn = cfg.connection
    kind = conn["kind"]
    if kind == "levi_civita":
        return ST.levi_civita(metric)
    if kind == "explicit":
        return ST.constant_connection(np.asarray(conn["coefficients"], dtype=float), "explicit")
    phi = conn["phi"]
    eps = float(phi.get("eps", 0.3))
    psi = ST.sample_covector(eps)
    pk = phi["kind"]
    if pk == "projective":
        return ST.projective(metric, psi)
    builders: dict[str, Callable] = {
        "weyl_like": lambda: ST.phi_weyl_like(metric, psi),
        "symmetric": lambda: ST.phi_symmetric(metric, psi),
        "antisymmetric": lambda: ST.phi_antisymmetric(ST.sample_two_form(eps), psi),
        "totally_antisymmetric": lambda: ST.phi_totally_antisymmetric(eps),
    }
    return ST.perturbed(metric, builders[pk](), pk)


def _perturbation(cfg: RunConfig, metric: Metric):
    """``(Sigma connection or None, SigmaTensor or None, EMField or None, em factor)``."""
    pert = cfg.perturbation
    kind = pert["kind"]
    c = cfg.constants.c
    if kind == "none":
        return None, None, None, 0.0
    params = dict(pert.get("params") or {})
    if kind == "em":
        em = PT.build_field(pert["field_id"], params)
        sigma = PT.em_sigma(em, float(pert["q"]), float(pert["m"]))
        return PT.sigma_to_Sigma(sigma, metric, c), sigma, em, 0.5 * float(pert["q"]) / float(pert["m"])
    sk = pert["sigma"]
    eps = float(params.get("eps", 0.3))
    if sk == "generic":
        return SS.sample_phase_perturbation(eps), None, None, 0.0
    k = cfg.constants
    sigma = {
        "psi": lambda: PT.sigma_psi(PT.sample_symmetric(eps)),
        "phi": lambda: PT.sigma_phi(ST.sample_two_form(eps)),
        "mixed": lambda: PT.sigma_mixed(PT.sample_symmetric(eps), ST.sample_two_form(eps))[0],
        "nu_tau": lambda: PT.sigma_nu_tau(c, k.hbar, k.m_particle, float(params.get("k", 0.0))),
        "antisymmetric_bar": lambda: PT.sigma_projected_antisymmetric(ST.sample_two_form(eps)),
    }[sk]()
    return PT.sigma_to_Sigma(sigma, metric, c), sigma, None, 1.0 if sk == "phi" else 0.0


def build_connections(cfg: RunConfig):
    """Metric, spacetime connection, phase connection and perturbation data for a configuration."""
    metric = build_metric(cfg.metric, cfg.metric_params)
    K = _spacetime_connection(cfg, metric)
    Sigma, sigma, em, phi_factor = _perturbation(cfg, metric)
    gam = SS.chi(K) if Sigma is None else SS.chi(K).plus(Sigma)
    return metric, K, gam, Sigma, sigma, em, phi_factor


# -- per-point evaluations ------------------------------------------------------------------------

def _mx(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


ALG, DER, BRK = "algebraic", "derivative", "bracket"

STATEMENTS = {
    "duality i_Xi Upsilon = -4": ("tangent 2-form and 2-vector are dual", ALG),
    "i_Lambda Omega = -3": ("phase 2-form and 2-vector are dual", ALG),
    "i_gamma Omega = 0": ("gamma spans the kernel of Omega", ALG),
    "i_tau Lambda = 0": ("tau spans the kernel of Lambda", ALG),
    "tau(gamma) = 1": ("gamma is normalized by tau", ALG),
    "volume covariant": ("-c^2 tau ^ Omega^3 = 3! c^4 alpha^4 |g|", ALG),
    "volume contravariant": ("-(1/c^2) gamma ^ Lambda^3 = -3!/(c alpha)^4 |g-bar|", ALG),
    "volume connection independence": ("volume coefficients do not depend on Gamma", ALG),
    "oracle d Omega": ("closed form of d Omega", DER),
    "oracle L_Gamma tau": ("closed form of L_Gamma tau", DER),
    "oracle L_R tau": ("closed form of L_R tau", DER),
    "oracle [gamma, Lambda]": ("expansion of [gamma, Lambda]", BRK),
    "oracle [Lambda, Lambda]": ("expansion of [Lambda, Lambda]", BRK),
    "oracle gamma ^ Lambda": ("expansion of gamma ^ Lambda", ALG),
    "oracle (Lambda# x Lambda#)(d tau)": ("expansion of (Lambda# x Lambda#)(d tau)", DER),
    "Omega = d*Upsilon_perp": ("Omega is the pullback of the orthogonal part of Upsilon", DER),
    "Omega - Omega[g] = -alt sbar": ("phase 2-form of a non-metric connection", DER),
    "Lambda - Lambda[g] = Lambda^a": ("phase 2-vector of a non-metric connection", DER),
    "L_Sigma tau = Omega^a / c^2": ("Lie derivative of tau along the perturbation", DER),
    "volume invariance": ("(-c^2 tau + A) ^ Omega^3 does not depend on Sigma", ALG),
    "sbar = [sigma]": ("lowered perturbation equals [sigma]", ALG),
    "Omega^a closed form": ("Omega^a = -alt(pi_perp sigma)", ALG),
    "Lambda^a closed form": ("Lambda^a from sigma", ALG),
    "Omega^a = phi / 2": ("antisymmetric source enters Omega with weight 1/2", ALG),
    "Lambda^a = 1/2 Alt(nu g#)^2 phi": ("antisymmetric source in Lambda", ALG),
    "dF = 0": ("electromagnetic field is closed", DER),
    "Omega_em = d(-c^2 tau + A)": ("spacetime potential gives an exact phase 2-form", DER),
}


def _kinematics_point(metric, K, p, c):
    out = {}
    for prefix, fn in (("useful", KIN.useful_identities), ("frame", KIN.frame_duality),
                       ("projector", KIN.projector_algebra)):
        for k, v in fn(metric, p, c).items():
            kind = DER if k in KIN.DERIVATIVE_IDENTITIES else ALG
            out[f"{prefix}: {k}"] = (v, kind, f"{prefix} identity")
    for k, v in KIN.nabla_barred_residuals(metric, ST.levi_civita(metric), p, c).items():
        out[f"nabla: {k}"] = (v, DER, "covariant derivative of barred quantities")
    return out


def _spacetime_point(metric, K, p, c):
    x, xdot = p.x, KIN.contact_map(metric, p, c)
    r = ST.tangent_residuals(metric, K, x, xdot)
    return {"duality i_Xi Upsilon = -4": (r["duality"] / 4.0, ALG, None)}


def _structures_point(metric, K, gam, p, cfg, with_pullback):
    k = cfg.constants
    c = k.c
    s = SS.PhaseStructures(metric, gam, p, c=c, hbar=k.hbar, mass=k.m_particle)
    b = CF.blocks(s)
    r = SS.point_residuals(s)
    om, lam, gm = s.val("omega"), s.val("lam"), s.val("gamma")
    n_om, n_lam, n_gm = _mx(om), _mx(lam), _mx(gm)
    n_gwl = _mx(s.gamma_wedge_lambda())
    vol = SS.volume_checks(s)
    base = SS.PhaseStructures(metric, SS.chi(ST.levi_civita(metric)), p, c=c)
    vol0 = SS.volume_checks(base)
    dt = s.d_tau()
    out = {
        "i_Lambda Omega = -3": r["i_lambda_omega"],
        "i_gamma Omega = 0": r["i_gamma_omega"],
        "i_tau Lambda = 0": r["i_tau_lambda"],
        "tau(gamma) = 1": r["tau_gamma"],
        "volume covariant": r["volume_covariant"],
        "volume contravariant": r["volume_contravariant"],
        "volume connection independence": max(
            abs(vol["covariant_coeff"] - vol0["covariant_coeff"]) / abs(vol0["covariant_expected"]),
            abs(vol["contravariant_coeff"] - vol0["contravariant_coeff"]) / abs(vol0["contravariant_expected"])),
        "oracle d Omega": _mx(s.d_omega() - CF.d_omega(b)) / n_om,
        "oracle L_Gamma tau": c * c * _mx(s.lie_gamma_tau() - CF.lie_gamma_tau(b)) / n_om,
        "oracle L_R tau": c * c * _mx(s.lie_R_tau() - CF.lie_R_tau(b)) / n_om,
        "oracle [gamma, Lambda]": _mx(s.gamma_lambda() - CF.gamma_lambda_general(b)) / (n_gm * n_lam),
        "oracle [Lambda, Lambda]": _mx(s.lambda_lambda() - CF.lambda_lambda(b)) / ((2.0 / c ** 2) * n_gwl),
        "oracle gamma ^ Lambda": _mx(s.gamma_wedge_lambda() - CF.gamma_wedge_lambda(b)) / n_gwl,
        "oracle (Lambda# x Lambda#)(d tau)": _mx(s.sharp2(dt) - CF.sharp2_dtau(b)) / (n_lam ** 2 * max(_mx(dt), 1e-300)),
    }
    if with_pullback:
        perp = SS.contact_pullbacks(metric, K, p, c)["perp"]
        out["Omega = d*Upsilon_perp"] = _mx(om - perp) / n_om
    return {name: (v, STATEMENTS[name][1], None) for name, v in out.items()}


def _perturbations_point(metric, gam, Sigma, sigma, em, phi_factor, p, cfg, rng_seed):
    c = cfg.constants.c
    base, split = PT.split_connection(gam, metric)
    coeff = split.coefficients(p)
    dO = PT.omega_difference(metric, gam, p, c)
    dL = PT.lambda_difference(metric, gam, p, c)
    n_om = _mx(SS.PhaseStructures(metric, base, p, c=c).val("omega"))
    n_lam = _mx(SS.PhaseStructures(metric, base, p, c=c).val("lam"))
    A = np.random.default_rng(rng_seed).normal(size=4)
    inv = max(PT.invariance_of_regular_volume(metric, gam, None, p, c)["residual"],
              PT.invariance_of_regular_volume(metric, gam, lambda x: A, p, c)["residual"])
    out = {
        "Omega - Omega[g] = -alt sbar": _mx(dO - PT.omega_a(coeff, metric, p, c)) / n_om,
        "Lambda - Lambda[g] = Lambda^a": _mx(dL - PT.lambda_a(coeff, metric, p, c)) / n_lam,
        "L_Sigma tau = Omega^a / c^2": c * c * _mx(PT.lie_sigma_tau(split, metric, p, c) - dO / c ** 2) / n_om,
        "volume invariance": inv,
    }
    if sigma is not None:
        q = KIN.PhaseQuantities(metric, p.z, c)
        sv = np.asarray(sigma.evaluate(p.z, q))
        sb = PT.sigma_bar(Sigma, metric, p, c)
        out["sbar = [sigma]"] = _mx(sb - PT.bracket_sigma(sv, q)) / max(_mx(sv), 1e-300)
        out["Omega^a closed form"] = _mx(dO - PT.omega_a_closed(sv, q)) / n_om
        out["Lambda^a closed form"] = _mx(dL - PT.lambda_a_closed(sv, q, c)) / n_lam
    if phi_factor:
        src = em.F if em is not None else ST.sample_two_form(float((cfg.perturbation.get("params") or {}).get("eps", 0.3)))
        phi = phi_factor * np.asarray(src(p.x))
        full = np.zeros_like(dO)
        full[:4, :4] = phi
        q = KIN.PhaseQuantities(metric, p.z, c)
        out["Omega^a = phi / 2"] = _mx(dO - full) / n_om
        out["Lambda^a = 1/2 Alt(nu g#)^2 phi"] = _mx(dL - PT.nu_g_sharp2(phi, q, c)) / n_lam
    if em is not None:
        out["dF = 0"] = PT.closure_residual(em, p.x) / max(_mx(em.F(p.x)), 1e-300)
        if em.potential is not None:
            pert = cfg.perturbation
            out["Omega_em = d(-c^2 tau + A)"] = PT.em_potential_residual(
                metric, em, float(pert["q"]), float(pert["m"]), p, c)
    return {name: (v, STATEMENTS[name][1], None) for name, v in out.items()}


# -- reduction ------------------------------------------------------------------------------------

def _reduce(per_point: list[tuple[KIN.PhasePoint, dict]], cfg: RunConfig) -> dict[str, Row]:
    tol = {ALG: cfg.tolerances.algebraic, DER: cfg.tolerances.derivative, BRK: cfg.tolerances.bracket}
    worst: dict[str, tuple[float, list[float], str, str]] = {}
    for p, rows in per_point:
        for name, (val, kind, statement) in rows.items():
            val = float(val)
            if name not in worst or val > worst[name][0] or (np.isnan(val) and not np.isnan(worst[name][0])):
                st = statement or STATEMENTS.get(name, (name,))[0]
                worst[name] = (val, [float(v) for v in p.z], kind, st)
    return {name: Row(v, z, tol[kind], st) for name, (v, z, kind, st) in sorted(worst.items())}


def _map(fn, points, workers: int):
    if workers <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, points))


def _verdict_dict(v: SS.StructureVerdict) -> dict:
    return {
        "flags": {k: bool(x) for k, x in v.flags.items()},
        "residuals": {k: float(x) for k, x in v.residuals.items()},
        "worst_points": v.worst_points,
        "tolerance": float(v.tolerance),
        "points": int(v.points),
        "skipped": int(v.skipped),
        "regular": bool(v.regular),
        "groups_coherent": bool(v.groups_coherent()),
    }


def run(cfg: RunConfig) -> Report:
    """Execute the requested suites; deterministic for a fixed configuration."""
    validate(cfg)
    metric, K, gam, Sigma, sigma, em, phi_factor = build_connections(cfg)
    k, smp = cfg.constants, cfg.sampling
    points, rejected = KIN.sample_phase_points(metric, smp.count, smp.seed, radius=smp.radius, c=k.c,
                                               max_alpha=smp.max_alpha, ranges=smp.ranges)
    if not points:
        raise NoSamplesError(f"no admissible sample points for {metric.name}")
    report = Report(skipped=rejected)
    report.environment = {
        "config_hash": cfg.digest(),
        "metric": metric.name,
        "metric_params": {kk: float(v) for kk, v in metric.params.items()},
        "connection": dict(cfg.connection).get("kind"),
        "phase_connection": gam.name,
        "perturbation": dict(cfg.perturbation).get("kind"),
        "constants": {"c": k.c, "hbar": k.hbar, "m_particle": k.m_particle},
        "seed": smp.seed,
        "samples": len(points),
        "suites": list(cfg.suites),
    }
    is_metric_chi = cfg.perturbation["kind"] == "none"

    if "spacetime" in cfg.suites:
        rows = _map(lambda p: (p, _spacetime_point(metric, K, p, k.c)), points, smp.workers)
        report.suites["spacetime"] = _reduce(rows, cfg)
        tangent = [(p.x, KIN.contact_map(metric, p, k.c)) for p in points]
        tv = ST.classify_tangent_structure(metric, K, tangent, cfg.tolerances.derivative)
        report.tangent_verdict = {
            "flags": {n: bool(tv[n]) for n in ("symplectic", "poisson", "exact")},
            "residuals": {n: float(v) for n, v in tv["residuals"].items()},
        }
    if "kinematics" in cfg.suites:
        rows = _map(lambda p: (p, _kinematics_point(metric, K, p, k.c)), points, smp.workers)
        report.suites["kinematics"] = _reduce(rows, cfg)
    if "structures" in cfg.suites:
        rows = _map(lambda p: (p, _structures_point(metric, K, gam, p, cfg, is_metric_chi)), points, smp.workers)
        report.suites["structures"] = _reduce(rows, cfg)
        verdict = SS.classify_phase_structure(metric, gam, points, cfg.tolerances.bracket,
                                              c=k.c, hbar=k.hbar, mass=k.m_particle)
        report.verdict = _verdict_dict(verdict)
    if "perturbations" in cfg.suites and Sigma is not None:
        rows = _map(lambda ip: (ip[1], _perturbations_point(metric, gam, Sigma, sigma, em, phi_factor, ip[1], cfg,
                                                            smp.seed * 100003 + ip[0])),
                    list(enumerate(points)), smp.workers)
        report.suites["perturbations"] = _reduce(rows, cfg)
        if sigma is not None:
            defect = max(PT.sigma_symmetry_defect(sigma, metric, p, k.c) for p in points)
            report.classification["alt [sigma] / |sigma|"] = defect
            report.classification["[sigma] symmetric"] = bool(defect <= cfg.tolerances.bracket)
            if report.verdict is not None and cfg.connection["kind"] == "levi_civita":
                report.classification["contact agrees with [sigma] symmetry"] = (
                    report.classification["[sigma] symmetric"] == report.verdict["flags"]["contact"])
    if cfg.expect:
        flags = (report.verdict or {}).get("flags", {})
        for name, expected in sorted(cfg.expect.items()):
            actual = flags.get(name)
            report.expectations[name] = {"expected": expected, "actual": actual, "pass": actual == expected}
    return report
