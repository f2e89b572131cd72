"""Acceptance criteria; each test prints one PASS/FAIL line."""

import numpy as np
import pytest

from conftest import mx, sample
from phasegeom import closed_forms as CF
from phasegeom import kinematics as KIN
from phasegeom import metrics as M
from phasegeom import perturbations as PT
from phasegeom import scales as S
from phasegeom import spacetime as ST
from phasegeom import structures as SS

TOL = 1e-8


@pytest.fixture
def verdict_line(capsys):
    def emit(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def metric_chi(metric):
    return SS.chi(ST.levi_civita(metric))


@pytest.fixture(scope="module")
def schwarzschild_200():
    metric = M.schwarzschild(1.0)
    return metric, sample(metric, 200, seed=3)


@pytest.fixture(scope="module")
def metric_case_verdict(schwarzschild_200):
    metric, pts = schwarzschild_200
    return SS.classify_phase_structure(metric, metric_chi(metric), pts, TOL)


def test_1_duality_anchors(verdict_line):
    worst_omega = worst_upsilon = 0.0
    rng = np.random.default_rng(11)
    for name in ("minkowski", "schwarzschild", "wavy"):
        metric = M.build_metric(name)
        gam = metric_chi(metric)
        for p in sample(metric, 40, seed=1):
            s = SS.PhaseStructures(metric, gam, p)
            worst_omega = max(worst_omega, abs(float(np.sum(s.val("lam") * s.val("omega"))) / 2.0 + 3.0))
            for xdot in (KIN.contact_map(metric, p), rng.uniform(-1, 1, 4)):
                ups, xi = ST.upsilon_xi(metric, ST.levi_civita(metric), p.x, xdot)
                worst_upsilon = max(worst_upsilon, abs(float(np.sum(xi * ups)) / 2.0 + 4.0))
    ok = worst_omega <= 1e-10 and worst_upsilon <= 1e-10
    verdict_line(1, ok, f"|i_L W + 3| = {worst_omega:.1e}, |i_X U + 4| = {worst_upsilon:.1e}")


def test_2_volume_anchors(verdict_line):
    worst_rel = worst_indep = 0.0
    for name in ("minkowski", "schwarzschild", "wavy", "tilted"):
        metric = M.build_metric(name)
        g1 = metric_chi(metric)
        g2 = g1.plus(SS.sample_phase_perturbation(0.3))
        for p in sample(metric, 20, seed=2):
            v1 = SS.volume_checks(SS.PhaseStructures(metric, g1, p))
            v2 = SS.volume_checks(SS.PhaseStructures(metric, g2, p))
            for v in (v1, v2):
                for kind in ("covariant", "contravariant"):
                    # closed forms recomputed here from alpha and det g
                    rel = abs(v[f"{kind}_coeff"] - v[f"{kind}_expected"]) / abs(v[f"{kind}_expected"])
                    worst_rel = max(worst_rel, rel)
            a = KIN.alpha0(metric, p)
            det = np.linalg.det(metric.components(p.x))
            assert v1["covariant_expected"] == pytest.approx(6 * a ** 4 * det, rel=1e-14)
            assert v1["contravariant_expected"] == pytest.approx(-6 / a ** 4 / det, rel=1e-14)
            for kind in ("covariant", "contravariant"):
                d = abs(v1[f"{kind}_coeff"] - v2[f"{kind}_coeff"]) / abs(v1[f"{kind}_expected"])
                worst_indep = max(worst_indep, d)
    ok = worst_rel <= 1e-9 and worst_indep <= 1e-12
    verdict_line(2, ok, f"relative anchor error {worst_rel:.1e}, Gamma dependence {worst_indep:.1e}")


def test_3_metric_case(verdict_line, metric_case_verdict):
    v = metric_case_verdict
    names = ("omega_exact", "d_omega", "gamma_lambda", "lambda_lambda")
    worst = max(v.residuals[n] for n in names)
    ok = v.points == 200 and worst <= TOL and v.flags["contact"] and v.flags["jacobi"]
    verdict_line(3, bool(ok), f"{v.points} points, max residual {worst:.1e}, "
                              f"contact={v.flags['contact']}, jacobi={v.flags['jacobi']}")


def six_configurations(metric):
    lc = metric_chi(metric)
    em = PT.uniform_field(1.0)
    return {
        "metric": (lc, dict(acc=True, contact=True, acpj=True, jacobi=True)),
        "symmetric sbar": (PT.connection_from_sigma(metric, PT.sigma_psi(PT.sample_symmetric(0.3))),
                           dict(acc=True, contact=True, acpj=True, jacobi=True)),
        "nu_tau": (PT.connection_from_sigma(metric, PT.sigma_nu_tau(k=0.7)),
                   dict(acc=True, contact=True, acpj=True, jacobi=True)),
        "projective": (SS.chi(ST.projective(metric, ST.sample_covector(0.3))),
                       dict(acc=True, contact=True, acpj=True, jacobi=True)),
        "antisymmetric sbar": (PT.connection_from_sigma(
            metric, PT.sigma_projected_antisymmetric(ST.sample_two_form(0.3))),
            dict(contact=False, jacobi=False)),
        "em uniform": (PT.em_connection(metric, em, 0.1, 1.0), dict(acc=True, contact=False, acpj=True, jacobi=False)),
    }


def test_4_equivalence_coherence(verdict_line, schwarzschild):
    pts = sample(schwarzschild, 20, seed=4)
    incoherent, unexpected = [], []
    for name, (gam, expected) in six_configurations(schwarzschild).items():
        v = SS.classify_phase_structure(schwarzschild, gam, pts, TOL)
        if not v.groups_coherent():
            incoherent.append(name)
        unexpected += [f"{name}.{k}" for k, e in expected.items() if bool(v.flags[k]) != e]
    ok = not incoherent and not unexpected
    verdict_line(4, ok, f"incoherent: {incoherent or 'none'}, unexpected flags: {unexpected or 'none'}")


def test_5_em_structures(verdict_line):
    schw, mink = M.schwarzschild(1.0), M.minkowski()
    details, ok = [], True
    for metric, em in ((mink, PT.uniform_field(1.0)), (schw, PT.uniform_field(1.0)), (schw, PT.coulomb_field(1.0))):
        pts = sample(metric, 20, seed=5)
        v = SS.classify_phase_structure(metric, PT.em_connection(metric, em, 0.1, 1.0), pts, TOL)
        ok &= v.residuals["d_omega"] <= TOL and v.regular and v.flags["acc"] and not v.flags["contact"]
        details.append(f"{metric.name}/{em.name} dW {v.residuals['d_omega']:.1e}")
    uniform = PT.uniform_field(1.0)
    exact = max(PT.em_potential_residual(m, uniform, 0.1, 1.0, p)
                for m in (mink, schw) for p in sample(m, 20, seed=6))
    phase_dep = min(PT.em_potential_residual(m, uniform, 0.1, 1.0, p, kappa=0.5)
                    for m in (mink, schw) for p in sample(m, 20, seed=6))
    contact_failure = phase_dep > 1e-3
    ok &= exact <= 1e-9 and contact_failure
    details.append(f"potential residual {exact:.1e}, phase-dependent {phase_dep:.1e} (contact failure)")
    verdict_line(5, bool(ok), "; ".join(details))


def test_6_oracle_equivalence(verdict_line, schwarzschild):
    gam = metric_chi(schwarzschild).plus(SS.sample_phase_perturbation(0.2))
    worst_gl = worst_ll = worst_pull = 0.0
    for p in sample(schwarzschild, 30, seed=7):
        s = SS.PhaseStructures(schwarzschild, gam, p)
        b = CF.blocks(s)
        n_gl = mx(s.val("gamma")) * mx(s.val("lam"))
        worst_gl = max(worst_gl, mx(s.gamma_lambda() - CF.gamma_lambda_general(b)) / n_gl)
        n_ll = 2.0 * mx(s.gamma_wedge_lambda())
        worst_ll = max(worst_ll, mx(s.lambda_lambda() - CF.lambda_lambda(b)) / n_ll)
    for K in (ST.levi_civita(schwarzschild), ST.projective(schwarzschild)):
        for p in sample(schwarzschild, 30, seed=8):
            om = SS.PhaseStructures(schwarzschild, SS.chi(K), p).val("omega")
            perp = SS.contact_pullbacks(schwarzschild, K, p)["perp"]
            worst_pull = max(worst_pull, mx(om - perp) / mx(om))
    ok = worst_gl <= 1e-8 and worst_ll <= 1e-8 and worst_pull <= 1e-9
    verdict_line(6, ok, f"[g,L] {worst_gl:.1e}, [L,L] {worst_ll:.1e}, pullback {worst_pull:.1e}")


def test_7_identity_suites(verdict_line, metrics):
    worst, where, n_useful = 0.0, "", 0
    for name, metric in metrics.items():
        lc = ST.levi_civita(metric)
        for p in sample(metric, 100, seed=9):
            rows = {}
            useful = KIN.useful_identities(metric, p)
            n_useful = len(useful)
            rows.update(useful)
            rows.update(KIN.frame_duality(metric, p))
            rows.update(KIN.projector_algebra(metric, p))
            rows.update(KIN.nabla_barred_residuals(metric, lc, p))
            fr = SS.adapted_phase_frames(SS.PhaseStructures(metric, SS.chi(lc), p))
            rows["eps(e) = 1"] = mx(fr.eps @ fr.e.T - np.eye(7))
            key = max(rows, key=rows.get)
            if rows[key] > worst:
                worst, where = rows[key], f"{name}: {key}"
    ok = worst <= 1e-9 and n_useful >= 17
    verdict_line(7, ok, f"{n_useful} useful identities, worst {worst:.1e} at {where or 'n/a'}")


def test_8_negative_controls(verdict_line, schwarzschild):
    pts = sample(schwarzschild, 20, seed=10)
    weyl = ST.perturbed(schwarzschild, ST.phi_weyl_like(schwarzschild, ST.sample_covector(0.3)), "weyl")
    tangent = [(p.x, KIN.contact_map(schwarzschild, p)) for p in pts]
    tv = ST.classify_tangent_structure(schwarzschild, weyl, tangent, TOL)
    detected = (not tv["symplectic"]) and tv["residuals"]["torsion"] <= 1e-12

    gam = PT.connection_from_sigma(schwarzschild, PT.sigma_projected_antisymmetric(ST.sample_two_form(0.3)))
    _, Sigma = PT.split_connection(gam, schwarzschild)
    worst = 0.0
    for p in pts:
        s = SS.PhaseStructures(schwarzschild, gam, p)
        om = s.val("omega")
        sb = PT.sigma_bar(Sigma, schwarzschild, p)
        assert mx(sb + sb.T) <= 1e-12 * mx(sb)
        expected = np.zeros((7, 7))
        expected[:4, :4] = -(sb - sb.T)
        worst = max(worst, mx(om + s.d_tau() - expected) / mx(om))
    v = SS.classify_phase_structure(schwarzschild, gam, pts, TOL)
    ok = detected and worst <= 1e-9 and not v.flags["contact"]
    verdict_line(8, bool(ok), f"weyl-like dU {tv['residuals']['d_upsilon']:.1e}, "
                              f"localization {worst:.1e}, contact={v.flags['contact']}")


def test_9_scale_covariance(verdict_line, schwarzschild_200, metric_case_verdict):
    metric, pts = schwarzschild_200
    c, hbar, mass = 2.99792458, 0.5, 3.0
    scaled_pts, _ = KIN.sample_phase_points(metric, 200, 3, c=c)
    assert all(np.array_equal(a.z, b.z) for a, b in zip(pts, scaled_pts))
    gam = metric_chi(metric)
    v = SS.classify_phase_structure(metric, gam, pts, TOL, c=c, hbar=hbar, mass=mass)
    same_flags = {k: bool(x) for k, x in v.flags.items()} == {k: bool(x) for k, x in metric_case_verdict.flags.items()}

    def ratio_error(a, b, dim):
        return mx(b - a * c ** float(S.c_power(dim))) / mx(b)

    worst = 0.0
    for p in pts:
        s1 = SS.PhaseStructures(metric, gam, p)
        s2 = SS.PhaseStructures(metric, gam, p, c=c, hbar=hbar, mass=mass)
        v1, v2 = SS.volume_checks(s1), SS.volume_checks(s2)
        errs = [
            ratio_error(s1.val("omega"), s2.val("omega"), S.PHASE_FORM),
            ratio_error(s1.val("lam"), s2.val("lam"), S.PHASE_BIVECTOR),
            ratio_error(s1.val("tau"), s2.val("tau"), S.TIME_FORM),
            ratio_error(s1.val("gamma"), s2.val("gamma"), S.DYNAMICAL_CONNECTION),
            ratio_error(KIN.contact_map(metric, p), KIN.contact_map(metric, p, c), S.CONTACT_MAP),
            ratio_error(np.array([v1["covariant_coeff"]]), np.array([v2["covariant_coeff"]]), S.COVARIANT_VOLUME),
            ratio_error(np.array([v1["contravariant_coeff"]]), np.array([v2["contravariant_coeff"]]),
                        S.CONTRAVARIANT_VOLUME),
        ]
        worst = max(worst, *errs)
    ok = same_flags and worst <= 1e-9
    verdict_line(9, ok, f"flags unchanged={same_flags}, worst relative scaling error {worst:.1e}")
