import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicf.chebyshev import SampledFunction
from nicf.maps import G
from nicf.measures import C_SHIFT, folded_H
from nicf.transfer import (
    CONJUGATE_U, FOLDED_U, OPERATORS, TruncationError, apply_P, apply_U, as_family,
    contraction_estimate, derivative_ratio, duality_check, fd_cross_check, fixed_point_residual,
    invariant_density, mu_operator, partition_of_unity_check, probe_functions,
    rearranged_weight_identity, weight_derivative_sum_check,
)

FAMILIES = [FOLDED_U, CONJUGATE_U]


def test_constants_and_families():
    assert C_SHIFT == pytest.approx(-1.0 / G**2, abs=1e-16)
    assert as_family("folded") is FOLDED_U or as_family("folded") == FOLDED_U
    assert FOLDED_U.paper_rate == 0.288 and CONJUGATE_U.paper_rate == 0.234
    assert FOLDED_U.k_min(1) == 2 and FOLDED_U.k_min(-1) == 3


def test_folded_weight_closed_form():
    # P_(k,e)(y) = H(y) (1/(m+c) - 1/(m+c+1)), m = k + e y, written out independently
    y = np.linspace(0.0, 0.5, 7)
    for k, e in [(2, 1), (3, -1), (7, 1), (40, -1)]:
        m = k + e * y
        H = (G + y) * (G + 1 - y) / G**3
        ref = H * (1.0 / (m - 1 / G**2) - 1.0 / (m - 1 / G**2 + 1))
        assert np.allclose(FOLDED_U.weight(k, e, y), ref, rtol=1e-14)


def test_folded_weight_is_density_ratio():
    # P = h(psi(y)) |psi'(y)| / h(y) with psi(y) = 1/(k + e y): the operator is the mu-adjoint
    y = np.linspace(0.01, 0.49, 9)
    h = invariant_density(FOLDED_U)
    for k, e in [(2, 1), (3, -1), (11, 1)]:
        m = k + e * y
        ref = h(1.0 / m) / m**2 / h(y)
        assert np.allclose(FOLDED_U.weight(k, e, y), ref, rtol=1e-13)


def test_conjugate_weights_are_density_ratios():
    x = np.linspace(0.0, 1.0, 9)
    h = invariant_density(CONJUGATE_U)
    for k in (2, 3, 9):
        m = k + x
        A = h(1.0 / m) / m**2 / h(x)
        B = h(1.0 - 1.0 / m) / m**2 / h(x)
        assert np.allclose(CONJUGATE_U.weight(k, 1, x), A, rtol=1e-13)
        assert np.allclose(CONJUGATE_U.weight(k, -1, x), B, rtol=1e-13)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_partition_of_unity_and_derivative_sum(family):
    y = np.linspace(*family.domain, 2001)
    assert partition_of_unity_check(family, y) < 1e-13
    assert weight_derivative_sum_check(family, y) < 1e-12


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_tails_against_long_direct_sums(family):
    # tail(K) - tail(M) is exactly the sum of the weights with K < k <= M
    y = np.linspace(*family.domain, 5)
    K, M = 50, 400_000
    direct = np.zeros_like(y)
    for e in (1, -1):
        k = np.arange(K + 1, M + 1, dtype=float)[:, None]
        direct += np.sum(family.weight(k, e, y[None, :]), axis=0)
    assert np.allclose(family.tail(K, y) - family.tail(M, y), direct, rtol=1e-11, atol=1e-15)
    # each of the two branch families contributes about h-ratio / M
    assert np.all(family.tail(M, y) < 3.0 / M)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_weight_derivative_matches_finite_difference(family):
    y = np.linspace(family.domain[0] + 0.01, family.domain[1] - 0.01, 5)
    eps = 1e-6
    for k, e in [(3, 1), (3, -1), (8, 1)]:
        fd = (family.weight(k, e, y + eps) - family.weight(k, e, y - eps)) / (2 * eps)
        assert np.allclose(family.weight_derivative(k, e, y), fd, rtol=1e-7, atol=1e-12)


def test_rearranged_identity():
    y = np.linspace(0.0, 0.5, 51)
    for k, e in [(2, 1), (3, -1), (5, 1), (100, -1)]:
        direct, first, second = rearranged_weight_identity(k, e, y)
        # the partial fractions cancel down from terms of size G^3 / k
        atol = 1e-14 * G**3 / k
        assert np.allclose(first, direct, rtol=1e-12, atol=atol)
        assert np.allclose(second, direct, rtol=1e-12, atol=atol)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_U_fixes_constants_and_P_fixes_density(family):
    one = SampledFunction.constant(1.0, family.domain)
    assert np.max(np.abs(apply_U(family, one).values - 1.0)) < 1e-13
    assert fixed_point_residual(family) < 1e-10


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_P_is_U_conjugated_by_density(family):
    h = invariant_density(family)
    f = SampledFunction.from_function(lambda y: np.cos(3 * y) + y, family.domain)
    lhs = apply_P(family, f.multiply(h))
    rhs = apply_U(family, f).multiply(h)
    assert np.max(np.abs(lhs.values - rhs.values)) < 1e-12


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_matrix_agrees_with_pointwise_series(family):
    f = SampledFunction.from_function(lambda y: np.exp(-2 * y) * np.sin(5 * y), family.domain)
    y = np.linspace(*family.domain, 37)
    via_matrix = apply_U(family, f)(y)
    pointwise = mu_operator(family).evaluate(f, y)
    assert np.max(np.abs(via_matrix - pointwise)) < 1e-12


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_U_preserves_mu_integrals(family):
    from nicf.measures import DensityKind, density

    kind = DensityKind.FOLDED_MU if family.folded else DensityKind.CONJUGATE_MU
    f = SampledFunction.from_function(lambda y: np.exp(3 * y), family.domain)
    w = lambda y: density(kind, y)
    # the collocated operator keeps the mean to about 1e-12, the level of its
    # frozen-tail approximation; centred iterations rely on this being small
    assert apply_U(family, f).integrate(weight=w) == pytest.approx(f.integrate(weight=w), rel=1e-10)


def test_duality_by_cylinder_quadrature():
    res = duality_check([0.3, -1.0, 2.0], [1.0, 0.5, -3.0, 4.0])
    assert res["difference"] < 1e-8


def test_power_matches_repeated_application():
    op = OPERATORS["folded_U"]
    f = SampledFunction.from_function(np.cos, FOLDED_U.domain)
    a = op.power(f, 3)
    b = op.apply(op.apply(op.apply(f)))
    assert np.allclose(a.values, b.values, atol=1e-15)


def test_truncation_error_for_tiny_K():
    f = SampledFunction.from_function(lambda y: np.sin(40 * y), FOLDED_U.domain)
    with pytest.raises(TruncationError):
        apply_U(FOLDED_U, f, K=3, tol=1e-14)


def test_probe_family_is_deterministic():
    a = probe_functions(FOLDED_U, 30, seed=4)
    b = probe_functions(FOLDED_U, 30, seed=4)
    assert [p[0] for p in a] == [p[0] for p in b]
    assert all(np.array_equal(x[1].values, y[1].values) for x, y in zip(a, b))
    assert a[0][0] == "T1" and len(a) == 30


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.kind.value)
def test_contraction_and_fd_cross_check(family):
    res = contraction_estimate(family, trials=36, fd_probes=6)
    assert res.passed
    assert res.fd_max_relative_error < 1e-6


def test_worst_folded_probe_ratio_is_frozen():
    # frozen from the first full run; T1 is the identity on the folded domain
    f = SampledFunction.from_function(lambda y: y, FOLDED_U.domain)
    assert derivative_ratio(FOLDED_U, f) == pytest.approx(0.11431245091614134, rel=1e-9)
    assert fd_cross_check(FOLDED_U, f) < 1e-7


def test_derivative_ratio_of_linear_function_by_series():
    # (U id)' = sum_k P_k' psi_k + P_k psi_k' evaluated termwise, independent of collocation
    y = np.linspace(0.0, 0.5, 2001)
    K = 20_000
    total = np.zeros_like(y)
    for e in (1, -1):
        k = np.arange(FOLDED_U.k_min(e), K + 1, dtype=float)[:, None]
        m = k + e * y[None, :]
        total += np.sum(FOLDED_U.weight_derivative(k, e, y[None, :]) / m
                        - FOLDED_U.weight(k, e, y[None, :]) * e / m**2, axis=0)
    assert np.max(np.abs(total)) == pytest.approx(0.11431245091614134, rel=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=8))
def test_U_contracts_derivatives_of_random_polynomials(coeffs):
    if np.max(np.abs(coeffs[1:])) < 1e-3:
        return
    p = np.polynomial.Polynomial(coeffs)
    for family in FAMILIES:
        f = SampledFunction.from_function(p, family.domain)
        assert derivative_ratio(family, f) <= family.paper_rate


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.5))
def test_folded_weights_positive_and_bounded_by_H(y):
    k = np.arange(2, 200, dtype=float)
    for e in (1, -1):
        kk = k[k + e >= 2]
        w = FOLDED_U.weight(kk, e, y)
        assert np.all(w > 0) and np.all(w <= folded_H(y))
