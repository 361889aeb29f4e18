import numpy as np
import pytest

from triplechar.cubic import (EPS_BAR, A_matrix, CubicSymbol, QForm, S_matrix, SA_matrix,
                              SampleGrid, axis, check_lemma_setudo, check_miki,
                              check_positivity_B, check_positivity_dtS, check_positivity_tJ,
                              classify_characteristics, condition_E, condition_H,
                              cubic_delta, cubic_discriminant, dS_matrix, det_S, extend_symbols,
                              from_q_form, lemma_floor, stated_floor, t_derivative, to_q_form)
from triplechar.errors import CutoffOverlapInvalid, EmptyFilteredSet
from triplechar.expr import Expression, bracket

rng = np.random.default_rng(7)


def triples(n=50):
    return rng.normal(size=n), rng.uniform(0.1, 3, size=n), rng.normal(size=n) * 0.3


def test_matrix_identities():
    a, b, c = triples()
    S, A, SA = S_matrix(a, b, c), A_matrix(a, b, c), SA_matrix(a, b, c)
    np.testing.assert_allclose(S @ A, SA, atol=1e-13)
    np.testing.assert_allclose(SA, np.swapaxes(SA, 1, 2), atol=0)
    np.testing.assert_allclose(np.linalg.det(S), det_S(a, b, c), rtol=1e-9, atol=1e-13)
    np.testing.assert_allclose(27 * det_S(a, b, c), cubic_discriminant(a, -b, c), rtol=1e-12)


def test_A_is_companion_of_the_symbol():
    a, b, c = 0.3, 2.0, -0.4
    ev = np.sort(np.linalg.eigvals(A_matrix(a, b, c)).real)
    np.testing.assert_allclose(ev, np.sort(np.roots([1, a, -b, c]).real), atol=1e-12)


def test_det_S_reduced_form():
    assert det_S(1.0, 2.0, 0.0) == pytest.approx(4 * (1 + 8) / 27, rel=1e-15)


def test_dS_matches_finite_difference():
    def path(s):
        return np.sin(s), 1 + s * s, 0.2 * np.cos(3 * s)

    s0, h = 0.4, 1e-6
    a, b, c = path(s0)
    da, db, dc = np.cos(s0), 2 * s0, -0.6 * np.sin(3 * s0)
    fd = (S_matrix(*path(s0 + h)) - S_matrix(*path(s0 - h))) / (2 * h)
    np.testing.assert_allclose(dS_matrix(a, b, c, da, db, dc), fd, atol=1e-8)


def test_delta_is_accurate_near_triple_points():
    from fractions import Fraction
    # tau^3 - 3 tau + c has a double root at c = 2, where Delta = 108 - 27 c^2 vanishes
    for d in (2.0 ** -40, -3e-15, 1e-12):
        c = 2.0 + d
        want = 108 - 27 * Fraction(c) ** 2
        assert abs(Fraction(cubic_delta(0.0, 3.0, c)) - want) <= 1e-15 * abs(want)


def test_floors():
    assert lemma_floor(EPS_BAR) == pytest.approx(0.92 / 27)
    assert stated_floor(EPS_BAR) == pytest.approx(0.98 / 27)


def test_axis_and_grid():
    np.testing.assert_allclose(axis({"min": 1, "max": 100, "count": 3, "spacing": "log"}),
                               [1, 10, 100])
    np.testing.assert_allclose(axis([0, 2]), [0, 2])
    with pytest.raises(ValueError):
        axis({"min": 0, "max": 1, "count": 3, "spacing": "log"})
    g = SampleGrid.product([0, 1, 2], [[0, 1]], [[5]])
    assert len(g) == 6 and g.dimension == 1
    assert g.point(4) == {"t": 1.0, "x": [1.0], "xi": [5.0]}
    with pytest.raises(ValueError):
        SampleGrid([1.0, 0.0], (np.zeros(1),), (np.ones(1),))
    with pytest.raises(ValueError):
        SampleGrid([0.0], (np.zeros(1),), (np.ones(2),))


def test_q_form_round_trip():
    q = QForm(Expression("0.3*x1 - t"), Expression("-(1 + t)*bracket_xi^2 + xi1"),
              Expression("(t^2 - x1)*bracket_xi^3"))
    phi = Expression("0.1 - 0.5*x1")
    sym = from_q_form(q, phi)
    for _ in range(20):
        t, x, xi = rng.uniform(0, 1), rng.uniform(-1, 1, 1), rng.uniform(-5, 5, 1)
        a, b, c, f = sym.evaluate(np.array([t]), x, xi)
        got = to_q_form(a, b, c, f, bracket(xi))
        want = [e(t, x, xi) for e in (q.q1, q.q2, q.q3)]
        np.testing.assert_allclose(np.ravel(got), want, rtol=1e-10, atol=1e-12)


def test_example_family_reduction():
    b1, b2, alpha, b0 = 0.2, 1.5, 0.7, -0.3
    q = QForm(lambda t, x, xi: 0.0 * t,
              lambda t, x, xi: -(t + alpha) * bracket(xi) ** 2,
              lambda t, x, xi: -(t * t * b2 + t * b1 + b0) * bracket(xi) ** 3)
    sym = from_q_form(q, lambda t, x, xi: -b1 + 0.0 * t)
    t = np.linspace(0, 1, 5)
    a, b, c, _ = sym.evaluate(t, np.zeros(1), np.array([3.0]))
    np.testing.assert_allclose(a, -3 * b1, rtol=1e-12)
    np.testing.assert_allclose(b, t + alpha - 3 * b1 ** 2, rtol=1e-12)
    np.testing.assert_allclose(c, -(t * t * b2 + b0 - b1 * alpha + b1 ** 3), rtol=1e-12)


def test_t_derivative_one_sided_at_zero():
    f = lambda t, x, xi: t ** 2 + 3 * t  # noqa: E731
    d = t_derivative(f, np.array([0.0, 0.5]), np.zeros(1), np.ones(1))
    np.testing.assert_allclose(d, [3.0, 4.0], atol=1e-8)


def test_symbol_derivative_method():
    assert CubicSymbol.constant(1, 2, 3).derivative_method == "analytic"
    assert CubicSymbol.from_expressions("0", "t", "0").derivative_method == "finite-difference"


def grid_small(t=None):
    t = np.linspace(0, 0.1, 6) if t is None else t
    return SampleGrid.product(t, [[-0.5, 0.0, 0.5]], [[-3.0, 1.0, 10.0]])


def test_lemma_check_with_c_zero():
    sym = CubicSymbol.from_expressions("x1", "t + 0.1", "0")
    r = check_lemma_setudo(grid_small(), sym)
    assert r.holds and r.constants["delta"] >= 1 / 27 - 1e-15
    assert r.constants["stated_floor_met"]


def test_lemma_check_empty_filter():
    with pytest.raises(EmptyFilteredSet):
        check_lemma_setudo(grid_small(), CubicSymbol.constant(0, -1, 0))


def test_positivity_checks_on_canonical():
    sym = CubicSymbol.from_expressions("0", "t", "0", da_dt="0", db_dt="1", dc_dt="0")
    g = grid_small()
    tj = check_positivity_tJ(g, sym, 0.1)
    assert tj.holds and tj.constants["eps1_max"] > 0.1
    ds = check_positivity_dtS(g, sym, 0.5)
    assert ds.holds
    pb = check_positivity_B(g, sym, [[0, 1, 0], [0, 0, 0], [0, 0, 0]], T=0.1)
    assert pb.constants["eps"] > 0
    assert not check_positivity_tJ(g, sym, 5.0).holds


def test_condition_normalizations():
    sym = CubicSymbol.from_expressions("1", "t", "0")
    g = SampleGrid.product({"min": 1e-8, "max": 0.1, "count": 30, "spacing": "log"}, [[0]], [[1]])
    assert condition_H(g, sym, 0.5).holds
    assert not condition_H(g, sym, 0.5, reduced=False).holds
    assert condition_H(g, sym, 0.2, reduced=False).holds
    assert not condition_E(g, sym, 1e-3).holds


def test_condition_rejects_negative_time():
    with pytest.raises(ValueError):
        condition_E(grid_small(np.array([-1.0, 0.0])), CubicSymbol.constant(), 0.1)


def test_check_miki_pass_and_fail():
    good = CubicSymbol.from_expressions("0", "t + x1^2", "0")
    g = SampleGrid.product({"min": 0, "max": 0.1, "count": 5}, [[-1, 0, 1]], [[1, 10]])
    r = check_miki(g, good)
    assert r.holds, r.details
    bad = CubicSymbol.from_expressions("0", "t^2", "0")
    g2 = SampleGrid.product({"min": 1e-6, "max": 0.1, "count": 6, "spacing": "log"}, [[0]], [[1]])
    r2 = check_miki(g2, bad)
    assert not r2.holds
    assert not r2.details["clauses"]["b>=delta1*t"]["holds"]
    assert r2.worst_point["t"] < 1e-3


def test_check_miki_smallness_switch():
    sym = CubicSymbol.from_expressions("1", "t", "t^2")
    g = SampleGrid.product({"min": 0, "max": 0.1, "count": 5}, [[0]], [[1]])
    assert not check_miki(g, sym).holds
    assert check_miki(g, sym, smallness=False).holds


def test_classification():
    g = SampleGrid.product([0.0, 0.5], [[0.0]], [[1.0]])
    table = classify_characteristics(g, CubicSymbol.from_expressions("0", "t", "0"))
    assert [(c.kind, c.effective) for c in table] == [("triple", True), ("simple", False)]
    table = classify_characteristics(g, CubicSymbol.from_expressions("0", "-t", "0"))
    assert table[0].kind == "triple" and not table[0].effective
    assert table[1].kind == "nonhyperbolic"
    table = classify_characteristics(g, CubicSymbol.constant(1, 0, 0))
    assert table[0].kind == "double"
    with pytest.raises(ValueError):
        classify_characteristics(SampleGrid.product([0.5], [[0.0]], [[1.0]]),
                                 CubicSymbol.constant())


def test_extension():
    sym = CubicSymbol.from_expressions("-3*x1", "t", "-t^2", name="local")
    chi = Expression("max(0, min(1, 2 - 400*abs(x1)))")
    chi_t = Expression("1 - max(0, min(1, 2 - 400*abs(x1)))")
    g = SampleGrid.product({"min": 1e-9, "max": 4e-4, "count": 5, "spacing": "log"},
                           [{"min": -0.05, "max": 0.05, "count": 11}], [[1, 100]])
    ext = extend_symbols(sym, chi, chi_t, 1.0, grid=g, delta1=1.0, T=4e-4)
    assert ext.name == "local+extended"
    assert check_miki(g, ext).holds
    assert not check_miki(g, sym).holds
    with pytest.raises(CutoffOverlapInvalid):
        extend_symbols(sym, chi, Expression("0"), 1.0, grid=g)
    with pytest.raises(ValueError):
        extend_symbols(sym, chi, chi_t, 1e-6, delta1=1.0, T=1.0)
