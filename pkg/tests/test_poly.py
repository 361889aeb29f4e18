from fractions import Fraction
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from triplechar.errors import NotHyperbolic
from triplechar.poly import (MonicPolynomial, companion, difference_product, discriminant,
                             distinct_real_root_count, flip, is_hyperbolic, min_root_gap,
                             nuij_smooth, roots)


def test_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        MonicPolynomial(())
    with pytest.raises(ValueError):
        MonicPolynomial((1.0, float("nan")))
    with pytest.raises(ValueError):
        MonicPolynomial((1.0, 1j))


def test_from_roots_and_evaluation():
    p = MonicPolynomial.from_roots([1, 2, 3])
    assert p.coeffs == (-6, 11, -6)
    assert p(4) == 6
    assert str(p).startswith("z^3")


def test_derivative_orders():
    p = MonicPolynomial((0, -1, 0))  # z^3 - z
    assert p.derivative() == [3, 0, -1]
    assert p.derivative(2) == [6, 0]


@pytest.mark.parametrize("coeffs, expected", [
    ((-1.0,), [1.0]),
    ((0.0, -1.0), [-1.0, 1.0]),
    ((-2.0, 1.0), [1.0, 1.0]),
    ((0.0, -1.0, 0.0), [-1.0, 0.0, 1.0]),
    ((-3.0, 3.0, -1.0), [1.0, 1.0, 1.0]),
    ((-10.0, 35.0, -50.0, 24.0), [1.0, 2.0, 3.0, 4.0]),
])
def test_roots_real_cases(coeffs, expected):
    rs = roots(MonicPolynomial(coeffs))
    np.testing.assert_allclose(rs.real, expected, atol=1e-9)
    assert rs.max_imag <= 1e-9


def test_roots_multiple_root_degree_five():
    p = MonicPolynomial(tuple(np.poly([2.0, 2.0, 2.0, -1.0, 0.5])[1:]))
    rs = roots(p)
    np.testing.assert_allclose(rs.real, [-1.0, 0.5, 2.0, 2.0, 2.0], atol=1e-7)
    assert is_hyperbolic(p)[0]


def test_close_distinct_roots_stay_distinct():
    r = [0.875, 5.5625, 6.0, 8.4375, 8.5, 8.5625]
    p = MonicPolynomial.from_roots([Fraction(x) for x in r])
    pf = MonicPolynomial(tuple(float(c) for c in p.coeffs))
    np.testing.assert_allclose(roots(pf).real, r, atol=1e-8)


def test_complex_roots_sorted():
    rs = roots(MonicPolynomial((0.0, 1.0)))
    assert rs.roots[0].imag < 0 < rs.roots[1].imag
    ok, max_im = is_hyperbolic(MonicPolynomial((0.0, 1.0)))
    assert not ok and max_im == pytest.approx(1.0)


def test_difference_product_sign_follows_sorted_order():
    assert difference_product(roots(MonicPolynomial((0.0, -1.0)))) == pytest.approx(-2.0)
    assert difference_product(roots(MonicPolynomial((-1.0,)))) == 1.0
    with pytest.raises(NotHyperbolic):
        difference_product(roots(MonicPolynomial((0.0, 1.0))))


def test_min_root_gap():
    assert min_root_gap(roots(MonicPolynomial((0.0, -1.0, 0.0)))) == pytest.approx(1.0)
    assert min_root_gap(roots(MonicPolynomial((3.0,)))) == math.inf


@pytest.mark.parametrize("coeffs, value", [
    ((0, -1, 0), 4),                # z^3 - z
    ((0, 1), -4),                   # z^2 + 1
    ((-10, 35, -50, 24), 144),      # roots 1..4
    ((-10, 35, -50, 24, 0), 82944),  # roots 0..4
    ((-2, 1), 0),
    ((5,), 1),
])
def test_discriminant_frozen_values(coeffs, value):
    p = MonicPolynomial(coeffs)
    assert discriminant(p, exact=True) == value
    assert discriminant(p) == pytest.approx(value)


def test_discriminant_of_fractions_is_exact():
    p = MonicPolynomial.from_roots([Fraction(1, 3), Fraction(-2, 7), Fraction(5, 2), Fraction(1)])
    lam = [Fraction(1, 3), Fraction(-2, 7), Fraction(5, 2), Fraction(1)]
    expected = Fraction(1)
    for i in range(4):
        for j in range(i + 1, 4):
            expected *= (lam[i] - lam[j]) ** 2
    assert discriminant(p, exact=True) == expected


def test_sturm_counts():
    assert distinct_real_root_count(MonicPolynomial((0, 1))) == 0
    assert distinct_real_root_count(MonicPolynomial((-2, 1))) == 1
    assert distinct_real_root_count(MonicPolynomial((-10, 35, -50, 24))) == 4
    assert distinct_real_root_count(MonicPolynomial.from_roots([1, 1, 1, 3])) == 2


def test_nuij_smooth():
    q = nuij_smooth(MonicPolynomial((0.0, 0.0)), 0.5)
    assert q.coeffs == (1.0, 0.0)
    exact = nuij_smooth(MonicPolynomial((Fraction(0), Fraction(0), Fraction(0))), Fraction(1, 3))
    assert all(isinstance(c, Fraction) for c in exact.coeffs)
    # (1 + e d)^2 z^3 = z^3 + 6e z^2 + 6e^2 z
    assert exact.coeffs == (Fraction(2), Fraction(2, 3), Fraction(0))
    assert distinct_real_root_count(exact) == 3


def test_flip_and_companion_shapes():
    np.testing.assert_array_equal(flip(3), [[0, 0, 1], [0, 1, 0], [1, 0, 0]])
    cp = companion(MonicPolynomial((2.0, 3.0, 4.0)))
    np.testing.assert_array_equal(cp.A_p[-1], [-4.0, -3.0, -2.0])
    np.testing.assert_array_equal(cp.A_tilde[0], [-2.0, -3.0, -4.0])


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_companion_characteristic_polynomials_symbolic(m):
    syms = sympy.symbols(f"a1:{m + 1}")
    z = sympy.Symbol("z")
    target = sympy.expand(z ** m + sum(a * z ** (m - 1 - i) for i, a in enumerate(syms)))
    A = sympy.zeros(m, m)
    for i in range(m - 1):
        A[i, i + 1] = 1
    for j in range(m):
        A[m - 1, j] = -syms[m - 1 - j]
    At = sympy.zeros(m, m)
    for j in range(m):
        At[0, j] = -syms[j]
    for i in range(1, m):
        At[i, i - 1] = 1
    assert sympy.expand(A.charpoly(z).as_expr() - target) == 0
    assert sympy.expand(At.charpoly(z).as_expr() - target) == 0
    vals = [float(k + 2) for k in range(m)]
    cp = companion(MonicPolynomial(tuple(vals)))
    subs = dict(zip(syms, vals))
    np.testing.assert_array_equal(cp.A_p, np.array(A.subs(subs), dtype=float))
    np.testing.assert_array_equal(cp.A_tilde, np.array(At.subs(subs), dtype=float))


root_lists = st.lists(st.integers(-40, 40), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(root_lists)
def test_roots_recover_integer_roots(ints):
    lam = sorted(k / 4 for k in ints)
    p = MonicPolynomial.from_roots([Fraction(k, 4) for k in ints])
    pf = MonicPolynomial(tuple(float(c) for c in p.coeffs))
    rs = roots(pf)
    scale = max(1.0, max(abs(v) for v in lam))
    mult = max(lam.count(v) for v in lam)
    np.testing.assert_allclose(rs.real, lam, atol=1e-6 * scale ** 1 * 10 ** (mult - 1))
    assert distinct_real_root_count(p) == len(set(lam))


@settings(max_examples=60, deadline=None)
@given(root_lists)
def test_discriminant_is_squared_difference_product(ints):
    lam = [Fraction(k, 4) for k in ints]
    p = MonicPolynomial.from_roots(lam)
    expected = Fraction(1)
    for i in range(len(lam)):
        for j in range(i + 1, len(lam)):
            expected *= (lam[i] - lam[j]) ** 2
    assert discriminant(p, exact=True) == expected
