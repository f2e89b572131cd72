import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import mx, sample
from phasegeom import jet as J
from phasegeom import kinematics as KIN
from phasegeom import metrics as M
from phasegeom import perturbations as PT
from phasegeom import spacetime as ST
from phasegeom import structures as PS

PSI = PT.sample_symmetric()
PHI = ST.sample_two_form()


def base_connection(metric):
    return PS.chi(ST.levi_civita(metric))


def spacetime_value(field, x):
    return np.asarray(J.value(field(np.asarray(x, dtype=float))))


# -- decomposition Gamma = Gamma[g] + Sigma ----------------------------------------------------

def test_split_of_metric_connection_is_zero(schwarzschild):
    p = sample(schwarzschild, 1, seed=30)[0]
    _, Sigma = PT.split_connection(base_connection(schwarzschild), schwarzschild)
    assert mx(Sigma.coefficients(p)) == 0.0
    gam = base_connection(schwarzschild).plus(PS.sample_phase_perturbation())
    base, Sigma = PT.split_connection(gam, schwarzschild)
    assert mx(base.coefficients(p) + Sigma.coefficients(p) - gam.coefficients(p)) <= 1e-15


@pytest.mark.parametrize("c", [1.0, 2.0])
def test_structure_differences_are_the_sigma_avatars(schwarzschild, c):
    Sigma = PS.sample_phase_perturbation()
    gam = base_connection(schwarzschild).plus(Sigma)
    for p in sample(schwarzschild, 10, seed=31, c=c):
        d_om = PT.omega_difference(schwarzschild, gam, p, c)
        assert mx(d_om - PT.omega_a(Sigma, schwarzschild, p, c)) <= 1e-10 * max(1.0, mx(d_om))
        d_lam = PT.lambda_difference(schwarzschild, gam, p, c)
        assert mx(d_lam - PT.lambda_a(Sigma, schwarzschild, p, c)) <= 1e-10 * max(1.0, mx(d_lam))
        # L_Sigma tau = (1/c^2) Omega^a
        lie = PT.lie_sigma_tau(Sigma, schwarzschild, p, c)
        assert mx(lie - d_om / c ** 2) <= 1e-9 * max(1.0, mx(lie))


@pytest.mark.parametrize("c,hbar,mass", [(1.0, 1.0, 1.0), (2.0, 0.5, 3.0)])
def test_nu_tau_sigma_lowers_to_orthogonal_metric(schwarzschild, c, hbar, mass):
    Sigma = PT.nu_tau_Sigma(schwarzschild, c, hbar, mass)
    gam = base_connection(schwarzschild).plus(Sigma)
    for p in sample(schwarzschild, 5, seed=32, c=c):
        g = schwarzschild.components(p.x)
        tau = KIN.time_form(schwarzschild, p, c)
        expected = (c * c * mass / hbar) * (g + c * c * np.outer(tau, tau))
        sb = PT.sigma_bar(Sigma, schwarzschild, p, c)
        assert mx(sb - expected) <= 1e-11 * mx(expected)
        d_om = PT.omega_difference(schwarzschild, gam, p, c)
        assert mx(d_om) <= 1e-10 * mx(PS.PhaseStructures(schwarzschild, gam, p, c=c).val("omega"))


def test_antisymmetric_sigma_bar_gives_minus_alt(schwarzschild):
    sigma = PT.sigma_projected_antisymmetric(PHI)
    Sigma = PT.sigma_to_Sigma(sigma, schwarzschild)
    gam = base_connection(schwarzschild).plus(Sigma)
    for p in sample(schwarzschild, 5, seed=33):
        sb = PT.sigma_bar(Sigma, schwarzschild, p)
        assert mx(sb + sb.T) <= 1e-12 * mx(sb)
        d_om = PT.omega_difference(schwarzschild, gam, p)
        # alt of an antisymmetric tensor has full components sb - sb^T = 2 sb
        assert mx(d_om[:4, :4] + 2.0 * sb) <= 1e-10 * mx(sb)
        assert mx(d_om[4:]) <= 1e-12 and mx(d_om[:, 4:]) <= 1e-12


# -- sigma tensors ------------------------------------------------------------------------------

@pytest.mark.parametrize("k", [0.0, 1.5, lambda z: 0.3 + 0.2 * J.sin(z[4])])
def test_nu_tau_sigma_family_is_invisible_for_every_k(schwarzschild, k):
    sigma = PT.sigma_nu_tau(k=k)
    gam = PT.connection_from_sigma(schwarzschild, sigma)
    for p in sample(schwarzschild, 5, seed=34):
        s = PS.PhaseStructures(schwarzschild, gam, p)
        assert mx(PT.omega_difference(schwarzschild, gam, p)) <= 1e-10 * s.scale_omega
        assert mx(PT.lambda_difference(schwarzschild, gam, p)) <= 1e-10 * s.scale_lambda


def test_psi_construction_has_no_avatars_and_symmetric_bracket(schwarzschild):
    sigma = PT.sigma_psi(PSI)
    gam = PT.connection_from_sigma(schwarzschild, sigma)
    for p in sample(schwarzschild, 8, seed=35):
        s = PS.PhaseStructures(schwarzschild, gam, p)
        assert mx(PT.omega_difference(schwarzschild, gam, p)) <= 1e-10 * s.scale_omega
        assert mx(PT.lambda_difference(schwarzschild, gam, p)) <= 1e-10 * s.scale_lambda
        assert PT.sigma_symmetry_defect(sigma, schwarzschild, p) <= 1e-11
        # closed form of the bracket tensor
        q = KIN.quantities(schwarzschild, p)
        w = spacetime_value(PSI, p.x)
        tau, d = q.tau, KIN.contact_map(schwarzschild, p)
        sym = 0.5 * (np.outer(tau, w @ d) + np.outer(w @ d, tau))
        expected = -0.5 * (w - 2.0 * sym + float(d @ w @ d) * np.outer(tau, tau))
        got = PT.bracket_sigma(sigma.evaluate(p.z, q), q)
        assert mx(got - expected) <= 1e-11 * max(1.0, mx(expected))


def test_phi_construction_avatars(schwarzschild):
    sigma = PT.sigma_phi(PHI)
    gam = PT.connection_from_sigma(schwarzschild, sigma)
    for p in sample(schwarzschild, 8, seed=36):
        phi = spacetime_value(PHI, p.x)
        d_om = PT.omega_difference(schwarzschild, gam, p)
        expected = np.zeros((7, 7))
        expected[:4, :4] = phi
        assert mx(d_om - expected) <= 1e-10 * mx(phi)
        q = KIN.quantities(schwarzschild, p)
        d_lam = PT.lambda_difference(schwarzschild, gam, p)
        assert mx(d_lam - PT.nu_g_sharp2(phi, q)) <= 1e-9 * max(1.0, mx(d_lam))
        assert PT.sigma_symmetry_defect(sigma, schwarzschild, p) > 1e-3


@pytest.mark.parametrize("make_sigma", [lambda: PT.sigma_psi(PSI), lambda: PT.sigma_phi(PHI),
                                        lambda: PT.sigma_mixed(PSI, PHI)[0]])
def test_avatar_closed_forms(schwarzschild, make_sigma):
    sigma = make_sigma()
    gam = PT.connection_from_sigma(schwarzschild, sigma)
    for p in sample(schwarzschild, 5, seed=37):
        q = KIN.quantities(schwarzschild, p)
        sv = sigma.evaluate(p.z, q)
        d_om = PT.omega_difference(schwarzschild, gam, p)
        assert mx(d_om - PT.omega_a_closed(sv, q)) <= 1e-10 * max(1.0, mx(d_om))
        d_lam = PT.lambda_difference(schwarzschild, gam, p)
        assert mx(d_lam - PT.lambda_a_closed(sv, q)) <= 1e-10 * max(1.0, mx(d_lam))


def test_mixed_construction_composes_and_matches_closed_form(schwarzschild):
    direct, composed = PT.sigma_mixed(PSI, PHI)
    closed = PT.Sigma_mixed_closed(PSI, PHI, schwarzschild)
    from_direct = PT.sigma_to_Sigma(direct, schwarzschild)
    gam = PT.connection_from_sigma(schwarzschild, direct)
    for p in sample(schwarzschild, 8, seed=38):
        q = KIN.quantities(schwarzschild, p)
        assert mx(direct.evaluate(p.z, q) - composed.evaluate(p.z, q)) <= 1e-14
        ref = closed.coefficients(p)
        assert mx(from_direct.coefficients(p) - ref) <= 1e-12 * mx(ref)
        # Omega[g, Sigma] = -c^2 d tau + (1/2) phi, in full components phi
        s = PS.PhaseStructures(schwarzschild, gam, p)
        expected = -s.d_tau()
        expected[:4, :4] += spacetime_value(PHI, p.x)
        assert mx(s.val("omega") - expected) <= 1e-9 * s.scale_omega


def test_declared_symmetry_is_validated(schwarzschild):
    p = sample(schwarzschild, 1, seed=39)[0]
    q = KIN.quantities(schwarzschild, p)
    liar = PT.SigmaTensor("liar", lambda z, q: PHI(z[:4]), "symmetric")
    with pytest.raises(PT.SymmetryError):
        liar.evaluate(p.z, q)
    with pytest.raises(PT.SymmetryError):
        PT.SigmaTensor("liar2", lambda z, q: PSI(z[:4]), "antisymmetric").evaluate(p.z, q)
    with pytest.raises(ValueError):
        PT.SigmaTensor("bad", lambda z, q: 0.0, "skew")


# -- classification through [sigma] ---------------------------------------------------------------

def test_bracket_symmetry_decides_contact(schwarzschild):
    pts = sample(schwarzschild, 6, seed=40)
    v_psi, d_psi = PT.classify_sigma(schwarzschild, PT.sigma_psi(PSI), pts)
    assert d_psi <= 1e-11 and v_psi.flags["contact"] and v_psi.flags["jacobi"]
    closed_phi = PT.coulomb_field(0.5).F
    v_phi, d_phi = PT.classify_sigma(schwarzschild, PT.sigma_phi(closed_phi), pts)
    assert d_phi > 1e-3 and v_phi.flags["acc"] and not v_phi.flags["contact"] and not v_phi.flags["jacobi"]
    # d Omega = (1/2) d phi, so a non-closed phi also loses ACC
    v_open, _ = PT.classify_sigma(schwarzschild, PT.sigma_phi(PHI), pts)
    assert v_open.flags["dual_pair"] and not v_open.flags["acc"]
    v_nu, d_nu = PT.classify_sigma(schwarzschild, PT.sigma_nu_tau(k=0.7), pts)
    assert d_nu <= 1e-11 and v_nu.flags["contact"]


# -- equivalence relation ----------------------------------------------------------------------------

def test_equivalence_relation_in_all_directions(schwarzschild):
    base = base_connection(schwarzschild).plus(PS.sample_phase_perturbation(0.1))
    equivalent = base.plus(PT.nu_tau_Sigma(schwarzschild))
    inequivalent = base.plus(PT.sigma_to_Sigma(PT.sigma_phi(PHI), schwarzschild))
    for p in sample(schwarzschild, 6, seed=41):
        same = PT.equivalence_residuals(schwarzschild, base, equivalent, p)
        assert max(same.values()) <= 1e-10, same
        diff = PT.equivalence_residuals(schwarzschild, base, inequivalent, p)
        assert min(diff.values()) > 1e-4, diff


# -- electromagnetic structure ------------------------------------------------------------------------

EM_CASES = [("minkowski", "uniform"), ("schwarzschild", "uniform"), ("schwarzschild", "coulomb")]


@pytest.mark.parametrize("metric_id,field_id", EM_CASES)
def test_em_omega_is_metric_omega_plus_half_field(metric_id, field_id):
    metric = M.build_metric(metric_id)
    em = PT.build_field(field_id)
    for p in sample(metric, 6, seed=42):
        es = PT.em_structure(metric, em, 0.1, 1.0, p)
        om0 = PS.PhaseStructures(metric, base_connection(metric), p).val("omega")
        expected = om0.copy()
        expected[:4, :4] += 0.05 * spacetime_value(em.F, p.x)
        assert mx(es.omega - expected) <= 1e-10 * mx(expected)
        assert mx(es.structures.d_omega()) <= 1e-8 * mx(es.omega)
        assert PT.closure_residual(em, p.x) <= 1e-12
        assert PT.potential_residual(em, p.x) <= 1e-12


def test_zero_field_reduces_to_metric_structures(schwarzschild):
    em = PT.uniform_field(0.0)
    for p in sample(schwarzschild, 3, seed=43):
        es = PT.em_structure(schwarzschild, em, 1.0, 1.0, p)
        s0 = PS.PhaseStructures(schwarzschild, base_connection(schwarzschild), p)
        assert mx(es.omega - s0.val("omega")) <= 1e-14 * s0.scale_omega
        assert mx(es.lam - s0.val("lam")) <= 1e-14 * s0.scale_lambda


def test_non_closed_field_is_rejected():
    metric = M.minkowski()
    p = sample(metric, 1, seed=44)[0]
    em = PT.non_closed_field()
    assert PT.closure_residual(em, p.x) > 0.1
    with pytest.raises(PT.ClosednessError):
        PT.em_structure(metric, em, 1.0, 1.0, p)
    with pytest.raises(KeyError):
        PT.build_field("dipole")


@given(st.floats(0.05, 2.0), st.floats(0.5, 4.0))
def test_charge_to_mass_homogeneity(q, m):
    metric = M.minkowski()
    em = PT.uniform_field(1.0)
    p = KIN.PhasePoint([0.3, -0.2, 0.5, 0.1], [0.1, -0.05, 0.2])
    om0 = PS.PhaseStructures(metric, base_connection(metric), p).val("omega")
    t1 = PT.em_structure(metric, em, q, m, p).omega - om0
    t2 = PT.em_structure(metric, em, 2 * q, m / 2, p).omega - om0
    assert mx(t2 - 4.0 * t1) <= 1e-13 * max(1.0, mx(t2))


def test_flags_depend_only_on_charge_to_mass_ratio(schwarzschild):
    pts = sample(schwarzschild, 5, seed=45)
    em = PT.build_field("uniform")
    verdicts = [PS.classify_phase_structure(schwarzschild, PT.em_connection(schwarzschild, em, q, m), pts)
                for q, m in ((0.1, 1.0), (0.3, 3.0))]
    assert verdicts[0].flags == verdicts[1].flags
    assert verdicts[0].flags["acc"] and not verdicts[0].flags["contact"]


@pytest.mark.parametrize("metric_id,field_id", EM_CASES)
def test_potential_gives_exact_em_form_only_without_velocity_dependence(metric_id, field_id):
    metric = M.build_metric(metric_id)
    em = PT.build_field(field_id)
    for p in sample(metric, 4, seed=46):
        assert PT.em_potential_residual(metric, em, 0.1, 1.0, p) <= 1e-9
        assert PT.em_potential_residual(metric, em, 0.1, 1.0, p, kappa=0.5) > 1e-3


# -- volume with a potential --------------------------------------------------------------------------

def test_regular_volume_is_sigma_independent(schwarzschild):
    A = ST.sample_covector(0.2)
    gam = PT.connection_from_sigma(schwarzschild, PT.sigma_phi(PHI))
    generic = base_connection(schwarzschild).plus(PS.sample_phase_perturbation())
    for p in sample(schwarzschild, 6, seed=47):
        for connection in (gam, generic):
            for pot in (None, A):
                r = PT.invariance_of_regular_volume(schwarzschild, connection, pot, p)
                assert r["residual"] <= 1e-10 and r["regular"]
        r0 = PT.invariance_of_regular_volume(schwarzschild, base_connection(schwarzschild), None, p)
        vol = PS.volume_checks(PS.PhaseStructures(schwarzschild, base_connection(schwarzschild), p))
        assert r0["lhs"] == pytest.approx(vol["covariant_coeff"], rel=1e-12)


def test_degenerate_potential_flags_irregularity(schwarzschild):
    for p in sample(schwarzschild, 3, seed=48):
        A = PT.degenerate_potential(schwarzschild, p)
        r = PT.invariance_of_regular_volume(schwarzschild, base_connection(schwarzschild), A, p)
        assert not r["regular"]
        assert abs(r["rhs"]) <= 1e-12
