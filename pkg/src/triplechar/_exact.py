"""Exact rational helpers used as certificates for floating-point results."""
from fractions import Fraction
from math import lcm


def as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(float(value))


def bareiss_det(rows):
    """Determinant of an integer matrix by fraction-free elimination."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            row_k = a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def exact_det(rows):
    """Exact determinant of a matrix of rationals (ints, Fractions or floats)."""
    scaled = []
    denom = 1
    for r in rows:
        fr = [as_fraction(v) for v in r]
        d = 1
        for v in fr:
            d = lcm(d, v.denominator)
        scaled.append([int(v * d) for v in fr])
        denom *= d
    return Fraction(bareiss_det(scaled), denom)


def integer_scaled(values):
    """Return (ints, D) with ints[i] = values[i] * D exactly."""
    fr = [as_fraction(v) for v in values]
    D = 1
    for v in fr:
        D = lcm(D, v.denominator)
    return [int(v * D) for v in fr], D
