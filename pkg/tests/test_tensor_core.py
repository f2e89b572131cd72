import itertools
from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phasegeom import jet as J
from phasegeom import scales as S
from phasegeom import tensor as T
from phasegeom.fields import FieldProvider, central_difference, relative_error, second_central_difference
from phasegeom.metrics import CATALOG, build_metric

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(float, n, elements=finite)


# -- jets --------------------------------------------------------------------------------

def _scalar_fn(x):
    return J.sin(x[0] * x[1]) + J.exp(x[2] * 0.3) * J.sqrt(x[0] * x[0] + 2.0) - J.reciprocal(x[1] * x[1] + 1.5)


def _scalar_np(x):
    return np.sin(x[0] * x[1]) + np.exp(x[2] * 0.3) * np.sqrt(x[0] ** 2 + 2.0) - 1.0 / (x[1] ** 2 + 1.5)


@given(vec(3))
def test_jet_gradient_and_hessian_match_finite_differences(x):
    jet = _scalar_fn(J.Jet.seed(x, 2))
    assert float(jet.val) == pytest.approx(_scalar_np(x), abs=1e-12)
    for a in range(3):
        fd = central_difference(_scalar_np, x, a)
        assert jet.grad[a] == pytest.approx(fd, rel=1e-5, abs=1e-6)
        for b in range(3):
            fd2 = second_central_difference(_scalar_np, x, a, b)
            assert jet.hess[a, b] == pytest.approx(fd2, rel=1e-4, abs=1e-4)
    assert np.allclose(jet.hess, jet.hess.T, atol=1e-12)


@given(arrays(float, (3, 3), elements=st.floats(-1, 1)))
def test_jet_inverse_derivative_matches_matrix_identity(a):
    m = np.eye(3) * 3.0 + a
    mj = J.Jet(m, np.array([a]))  # d m / dx = a
    inv = J.inv(mj)
    mi = np.linalg.inv(m)
    assert np.allclose(inv.val, mi, atol=1e-12)
    assert np.allclose(inv.grad[0], -mi @ a @ mi, atol=1e-10)


def test_jet_einsum_is_product_rule():
    x = J.Jet.seed(np.array([0.3, -0.7]), 2)
    a = J.stack([x[0], x[1]])
    b = J.stack([x[1] * x[1], J.sin(x[0])])
    out = J.einsum("i,i->", a, b)
    # f = x0 x1^2 + x1 sin x0
    x0, x1 = 0.3, -0.7
    assert float(out.val) == pytest.approx(x0 * x1 ** 2 + x1 * np.sin(x0))
    assert out.grad[0] == pytest.approx(x1 ** 2 + x1 * np.cos(x0))
    assert out.grad[1] == pytest.approx(2 * x0 * x1 + np.sin(x0))
    assert out.hess[0, 1] == pytest.approx(2 * x1 + np.cos(x0))


def test_jet_truncation_and_errors():
    x = J.Jet.seed(np.array([1.0, 2.0]), 2)
    assert x.order == 2 and x.truncate(1).order == 1 and x.truncate(0).order == 0
    with pytest.raises(ValueError):
        J.Jet(np.ones(2)).derivative()


# -- alt / wedge / contract --------------------------------------------------------------

def brute_alt(a):
    p = a.ndim
    out = np.zeros_like(a)
    for perm in itertools.permutations(range(p)):
        out += T.permutation_sign(perm) * a.transpose(perm)
    return out / factorial(p)


@given(arrays(float, (4, 4, 4), elements=finite))
def test_alt_matches_permutation_sum_and_is_idempotent(a):
    out = T.alt_array(a)
    assert np.allclose(out, brute_alt(a), atol=1e-12)
    assert np.allclose(T.alt_array(out), out, atol=1e-12)


def test_alt_examples():
    t = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(T.alt(T.Components(t, ("co", "co"))).data, [[0, 0.5], [-0.5, 0]])
    s = np.array([[1.0, 2.0], [2.0, 5.0]])
    assert np.array_equal(T.alt(T.Components(s, ("co", "co"))).data, np.zeros((2, 2)))
    f = np.array([[0.0, 3.0], [-3.0, 0.0]])
    assert np.array_equal(T.alt(T.Components.form(f)).data, f)


def test_alt_rejects_mixed_variance_and_flags():
    with pytest.raises(T.ShapeError):
        T.alt(T.Components(np.zeros((4, 4)), ("co", "contra")))
    with pytest.raises(T.ShapeError):
        T.Components(np.ones((3, 3)), ("co", "co"), symmetry="antisymmetric")
    with pytest.raises(T.ShapeError):
        T.Components(np.array([[0.0, 1.0], [2.0, 0.0]]), ("co", "co"), symmetry="symmetric")


def brute_wedge(arrays_):
    """Determinant convention: (a1 ^ ... ^ ak)(X1..Xk) = det[a_i(X_j)] for 1-forms."""
    n = arrays_[0].shape[0]
    k = len(arrays_)
    out = np.zeros((n,) * k)
    for idx in itertools.product(range(n), repeat=k):
        out[idx] = np.linalg.det(np.array([[a[j] for j in idx] for a in arrays_]))
    return out


def test_wedge_examples():
    e = np.eye(4)
    assert np.array_equal(T.wedge_array(e[0], e[0]), np.zeros((4, 4)))
    w = T.wedge_array(e[0], e[1])
    assert w[0, 1] == 1.0 and w[1, 0] == -1.0


@given(arrays(float, (3, 5), elements=finite))
def test_wedge_associativity_against_brute_force(rows):
    a, b, c = rows
    left = T.wedge_array(T.wedge_array(a, b), c)
    right = T.wedge_array(a, T.wedge_array(b, c))
    brute = brute_wedge([a, b, c])
    scale = max(1.0, float(np.max(np.abs(brute))))
    assert np.max(np.abs(left - brute)) <= 1e-12 * scale * 10
    assert np.max(np.abs(right - brute)) <= 1e-12 * scale * 10


@given(arrays(float, (4, 5), elements=finite), st.floats(-2, 2))
def test_wedge_graded_commutativity_and_bilinearity(rows, k):
    a, b, c, d = rows
    two = T.wedge_array(a, b)
    assert np.allclose(T.wedge_array(two, c), T.wedge_array(c, two), atol=1e-10)  # (-1)^{2*1} = 1
    assert np.allclose(T.wedge_array(a, b), -T.wedge_array(b, a), atol=1e-12)
    lhs = T.wedge_array(a * k + d, b)
    assert np.allclose(lhs, k * T.wedge_array(a, b) + T.wedge_array(d, b), atol=1e-10)


def test_wedge_beyond_dimension_is_zero():
    e = np.eye(2)
    out = T.wedge_many(e[0], e[1], e[0] + e[1])
    assert np.count_nonzero(out) == 0


def test_wedge_adds_scales_and_checks_kind():
    a = T.Components.form(np.eye(4)[0], S.TIME)
    b = T.Components.form(np.eye(4)[1], S.LENGTH)
    assert T.wedge(a, b).scale == S.TIME + S.LENGTH
    with pytest.raises(T.ShapeError):
        T.wedge(a, T.Components.multivector(np.eye(4)[1]))


def test_contract_examples():
    v = T.Components(np.array([1.0, 2.0, 3.0, 4.0]), ("contra",))
    delta = T.Components(np.eye(4), ("contra", "co"))
    assert np.array_equal(T.contract(delta, v, [(1, 0)]).data, v.data)
    g = np.diag([-1.0, 2.0, 3.0, 4.0])
    gc = T.Components(g, ("co", "co"), S.METRIC)
    gi = T.Components(np.linalg.inv(g), ("contra", "contra"), S.INVERSE_METRIC)
    out = T.contract(gc, gi, [(1, 0)])
    assert np.allclose(out.data, np.eye(4)) and out.scale.is_dimensionless
    with pytest.raises(T.ContractionError):
        T.contract(gc, gc, [(1, 0)])


def test_full_contract_normalization():
    e = np.eye(7)
    form = T.Components.form(T.wedge_array(e[0], e[1]))
    mv = T.Components.multivector(T.wedge_array(e[0], e[1]))
    assert T.full_contract(mv, form) == pytest.approx(1.0)


# -- scale dimensions --------------------------------------------------------------------

def test_scale_constants():
    assert S.SPEED_OF_LIGHT.as_tuple() == (-1, 1, 0)
    assert S.PLANCK.as_tuple() == (-1, 2, 1)
    assert S.PARTICLE_MASS.as_tuple() == (0, 0, 1)
    assert S.CHARGE.as_tuple() == (-1, Fraction(3, 2), Fraction(1, 2))
    assert S.METRIC.as_tuple() == (0, 2, 0)


@given(*(st.fractions(max_denominator=6) for _ in range(6)))
def test_scale_addition_is_componentwise(a, b, c, d, e, f):
    x, y = S.ScaleDim(a, b, c), S.ScaleDim(d, e, f)
    assert (x + y).as_tuple() == (a + d, b + e, c + f)
    assert (x - x).is_dimensionless
    if x == y:
        assert S.require_same(x, y) == x
    else:
        with pytest.raises(S.ScaleMismatch):
            S.require_same(x, y)


def test_adding_components_of_different_scale_fails():
    a = T.Components(np.ones(4), ("co",), S.TIME)
    b = T.Components(np.ones(4), ("co",), S.LENGTH)
    with pytest.raises(S.ScaleMismatch):
        a + b


def test_c_power_of_derived_objects():
    assert S.c_power(S.PHASE_FORM) == 1
    assert S.c_power(S.PHASE_BIVECTOR) == -1
    assert S.c_power(S.TIME_FORM) == -1
    assert S.c_power(S.COVARIANT_VOLUME) == 4
    assert S.c_power(S.CONTRAVARIANT_VOLUME) == -4


# -- field providers -----------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(CATALOG))
def test_metric_providers_match_finite_differences(name):
    metric = build_metric(name)
    prov = metric.provider
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 50:
        x = np.array([rng.uniform(lo, hi) for lo, hi in metric.ranges])
        if not metric.domain(x):
            continue
        checked += 1
        d1, d2 = prov.d1(x), prov.d2(x)
        for a in range(4):
            assert relative_error(d1[a], central_difference(prov.eval, x, a)) <= 1e-5
            assert np.allclose(d2[a], d2[:, a], atol=1e-12)  # Clairaut
            for b in range(4):
                fd2 = second_central_difference(prov.eval, x, a, b)
                assert relative_error(d2[a, b], fd2) <= 1e-4


def test_first_order_provider_falls_back_to_differences_of_exact_partials():
    prov = FieldProvider(2, lambda x: J.sin(x[0]) * x[1], max_order=1)
    x = np.array([0.4, 1.3])
    h = prov.d2(x)
    assert h[0, 0] == pytest.approx(-np.sin(0.4) * 1.3, rel=1e-7)
    assert h[0, 1] == pytest.approx(np.cos(0.4), rel=1e-7)
