import math

import numpy as np
import pytest

from triplechar.errors import ExpressionError
from triplechar.expr import Expression, bracket, compile_expression


def ev(src, t=0.5, x=(0.25,), xi=(2.0,), dim=1):
    return Expression(src, dim)(t, np.array(x), np.array(xi))


@pytest.mark.parametrize("src, value", [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 ^ 3 ^ 2", 512.0),
    ("-2 ^ 2", -4.0),
    ("2 ^ -1", 0.5),
    ("7 / 2", 3.5),
    ("6 ÷ 4 × 2", 3.0),
    ("1e-3 * 1000", 1.0),
    (".5 + 1.", 1.5),
    ("min(3, 1, 2)", 1.0),
    ("max(-1, -4)", -1.0),
    ("abs(-2) + sqrt(16) + exp(0)", 7.0),
    ("pi", math.pi),
    ("+t", 0.5),
])
def test_arithmetic(src, value):
    assert ev(src) == pytest.approx(value)


def test_variables():
    assert ev("t + x1 + xi1") == pytest.approx(2.75)
    assert ev("bracket_xi") == pytest.approx(math.sqrt(5.0))
    e = Expression("x2 * xi1", 2)
    assert e(1.0, np.array([0.0, 3.0]), np.array([2.0, 0.0])) == 6.0
    assert e.depends_on_x and e.variables == {"x2", "xi1"}
    assert not Expression("t * xi1").depends_on_x


def test_array_time_broadcast():
    out = Expression("2")(np.linspace(0, 1, 4), np.zeros(1), np.ones(1))
    assert out.shape == (4,)
    np.testing.assert_array_equal(Expression("t^2")(np.array([1.0, 2.0]), [0], [1]), [1.0, 4.0])


@pytest.mark.parametrize("src, pos", [
    ("t + y", 4),
    ("foo(t)", 0),
    ("x2", 0),
    ("1 + ", 4),
    ("(1 + 2", 6),
    ("1 $ 2", 2),
    ("sqrt(1, 2)", 0),
    ("min(1)", 0),
    ("1 2", 2),
])
def test_errors_report_position(src, pos):
    with pytest.raises(ExpressionError) as info:
        Expression(src, 1)
    assert info.value.position == pos
    assert f"position {pos}" in str(info.value)


def test_empty_rejected():
    with pytest.raises(ExpressionError):
        Expression("   ")


def test_bracket_and_compile():
    assert bracket([3.0, 4.0]) == pytest.approx(math.sqrt(26.0))
    assert compile_expression(3, 1)(0.0, [0], [1]) == 3.0
    assert "t" in repr(Expression("t"))
