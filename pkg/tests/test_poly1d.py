import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cochain_fec.poly1d import (
    MAX_ORDER,
    Mollifier,
    Polynomial1D,
    ScalarField1D,
    gauss_integrate,
    integrated_legendre,
    legendre,
    mollifier_constant,
    mollifier_weights,
)

coeff_lists = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=10)


def _mp_bump_integral(power=1, deriv=False):
    mpmath.mp.dps = 30

    def bump(x):
        return mpmath.exp(1 / (x * x - 1))

    def dbump(x):
        return bump(x) * (-2 * x) / (x * x - 1) ** 2

    f = dbump if deriv else bump
    return mpmath.quad(lambda x: f(x) ** power, [-1, 0, 1])


def test_polynomial_trims_and_evaluates():
    p = Polynomial1D([1.0, 2.0, 0.0, 0.0])
    assert p.degree == 1
    assert p(0.5) == pytest.approx(2.0)
    assert Polynomial1D([0.0, 0.0]).is_zero()
    assert Polynomial1D.zero().degree == 0


def test_monomial_coefficients_roundtrip():
    c = [0.5, -1.0, 2.0, 3.0]
    np.testing.assert_allclose(Polynomial1D(c).coeffs, c, atol=1e-14)


def test_legendre_examples():
    assert legendre(0).coeff_distance(Polynomial1D([1.0])) < 1e-15
    assert legendre(1).coeff_distance(Polynomial1D([-1.0, 2.0])) < 1e-15
    assert abs(legendre(2).inner(legendre(3))) < 1e-14


def test_legendre_gram_schmidt_oracle():
    # Gram-Schmidt on monomials with exact rational moments, scaled to l(1) = 1
    from fractions import Fraction

    def inner(p, q):
        return sum(Fraction(a * b) / (i + j + 1) for i, a in enumerate(p) for j, b in enumerate(q))

    family = []
    for n in range(6):
        v = [Fraction(0)] * n + [Fraction(1)]
        for q in family:
            c = inner(v, q) / inner(q, q)
            v = [a - c * (q[i] if i < len(q) else 0) for i, a in enumerate(v)]
        family.append(v)
        scaled = [float(a / sum(v)) for a in v]
        assert legendre(n).coeff_distance(Polynomial1D(scaled)) < 1e-12


def test_legendre_orthogonality_and_normalization():
    for i in range(11):
        assert legendre(i)(1.0) == pytest.approx(1.0, abs=1e-14)
        for j in range(i):
            assert abs(legendre(i).inner(legendre(j))) <= 1e-12
        assert legendre(i).inner(legendre(i)) == pytest.approx(1.0 / (2 * i + 1), rel=1e-12)


def test_order_overflow():
    with pytest.raises(ValueError, match="order overflow"):
        legendre(MAX_ORDER + 1)


def test_integrated_legendre_examples():
    assert integrated_legendre(1, 1).coeff_distance(Polynomial1D([0.0, -1.0, 1.0])) < 1e-15
    K3 = integrated_legendre(3, 2)
    assert abs(K3(0.0)) < 1e-14 and abs(K3(1.0)) < 1e-14
    with pytest.raises(ValueError):
        integrated_legendre(0, 1)


@pytest.mark.parametrize("m", range(1, 9))
def test_legendre_integral_relation(m):
    lhs = integrated_legendre(m, 1) * (2 * (2 * m + 1))
    rhs = legendre(m + 1) - legendre(m - 1)
    assert lhs.coeff_distance(rhs) <= 1e-12


@pytest.mark.parametrize("m", range(1, 9))
def test_integrated_legendre_endpoint_zeros(m):
    L = integrated_legendre(m, 1)
    assert abs(L(0.0)) < 1e-13 and abs(L(1.0)) < 1e-13
    if m >= 2:
        K = integrated_legendre(m, 2)
        assert abs(K(0.0)) < 1e-13 and abs(K(1.0)) < 1e-13


@settings(max_examples=60, deadline=None)
@given(coeff_lists)
def test_deriv_antideriv_inverse(c):
    p = Polynomial1D(c)
    assert p.antideriv().deriv().coeff_distance(p) <= 1e-12 * (1 + max(map(abs, c)))
    q = p.deriv().antideriv()
    assert (q - (p - p(0.0))).coeff_distance(Polynomial1D.zero()) <= 1e-11 * (1 + max(map(abs, c)))


@settings(max_examples=60, deadline=None)
@given(coeff_lists, st.floats(-2, 1), st.floats(0.1, 3))
def test_gauss_exact_on_polynomials(c, a, width):
    p = Polynomial1D(c)
    npts = math.ceil((p.degree + 1) / 2)
    exact = p.integral(a, a + width)
    scale = 1 + sum(abs(x) for x in c) * max(1.0, abs(a) + width) ** len(c)
    assert abs(gauss_integrate(p, a, a + width, npts) - exact) <= 1e-13 * scale


def test_gauss_examples():
    assert gauss_integrate(lambda x: x * x, 0.0, 1.0, 2) == pytest.approx(1 / 3, abs=1e-15)
    assert gauss_integrate(lambda x: np.ones_like(x), -0.5, 2.0, 1) == pytest.approx(2.5)
    with pytest.raises(FloatingPointError, match="non-finite integrand"):
        gauss_integrate(lambda x: np.full_like(x, np.inf), -1.0, 1.0, 2)


def test_mollifier_constant_matches_mpmath():
    assert mollifier_constant() == pytest.approx(float(1 / _mp_bump_integral()), rel=1e-13)


def test_mollifier_norms_match_mpmath():
    C = mollifier_constant()
    mol = Mollifier(0.2)
    assert mol.eta_l2 == pytest.approx(C * float(mpmath.sqrt(_mp_bump_integral(2))), rel=1e-12)
    assert mol.eta_prime_l2 == pytest.approx(
        C * float(mpmath.sqrt(_mp_bump_integral(2, deriv=True))), rel=1e-12)


@pytest.mark.parametrize("rho", [1 / 3, 0.2, 0.05])
def test_mollifier_normalization(rho):
    mol = mollifier_weights(rho)
    for side in ("l", "r"):
        x, w = mol.rule(side)
        assert w @ mol.weight(side, x) == pytest.approx(1.0, abs=1e-10)
        assert abs(w @ mol.weight_prime(side, x)) <= 1e-10
    x, w = mol.rule("l")
    l2 = math.sqrt(w @ mol.eta_l(x) ** 2)
    assert l2 * math.sqrt(rho) == pytest.approx(mol.eta_l2, abs=1e-8)


def test_mollifier_gauss_example():
    mol = Mollifier(0.2)
    assert gauss_integrate(mol.eta_l, -0.2, 0.2, 30, panels=8) == pytest.approx(1.0, abs=1e-10)


def test_mollifier_support():
    mol = Mollifier(0.2)
    x = np.array([-0.5, -0.2, 0.2, 0.7, 1.3])
    np.testing.assert_array_equal(mol.eta_l(x), 0.0)
    assert np.all(mol.eta_r(np.array([0.9, 1.0, 1.1])) > 0)
    np.testing.assert_array_equal(mol.eta_r(np.array([0.7, 0.8, 1.2, 1.5])), 0.0)


def test_mollifier_derivative_is_analytic():
    mol = Mollifier(0.25)
    x = np.linspace(-0.24, 0.24, 13)
    h = 1e-6
    fd = (mol.eta_l(x + h) - mol.eta_l(x - h)) / (2 * h)
    np.testing.assert_allclose(mol.eta_l_prime(x), fd, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("rho", [0.0, -0.1, 0.34, 0.5])
def test_mollifier_rejects_radius(rho):
    with pytest.raises(ValueError, match="perturbation radius out of range"):
        mollifier_weights(rho)


def test_scalar_field_needs_derivative_for_d():
    with pytest.raises(ValueError, match="C1 data required"):
        ScalarField1D(np.sin).d()
    du = ScalarField1D(np.sin, np.cos).d()
    assert du.form == 1 and du(0.0) == pytest.approx(1.0)
