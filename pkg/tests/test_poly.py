from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from interlace_lab.errors import TruncationOrderError
from interlace_lab.poly import ONE, ZERO, FormalPolynomial, TruncatedSeries, X

small = st.integers(-5, 5)


def poly_from(coeffs):
    x, y = X("x"), X(("l", (0,)))
    return sum((c * x**i * y**j for (i, j), c in coeffs.items()), ZERO)


polys = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), small, max_size=5).map(poly_from)


@given(polys, polys, polys)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == ZERO


@given(polys)
def test_json_round_trip(p):
    assert FormalPolynomial.from_json(p.to_json()) == p
    assert hash(FormalPolynomial.from_json(p.to_json())) == hash(p)


def test_binomial_and_substitution():
    x, y = X("x"), X("y")
    p = (x + y) ** 3
    assert p.coefficient([("x", 2), ("y", 1)]) == 3
    assert p.substitute({"y": 1}).evaluate({"x": Fraction(1, 2)}) == Fraction(27, 8)
    assert (x / 3).coefficient([("x", 1)]) == Fraction(1, 3)
    assert p.degree() == 3 and p.degree("x") == 3


def test_exp_series_is_exact():
    # exp(s) truncated at order 6 has coefficients 1/n!
    e = TruncatedSeries([ZERO, ONE], 6).exp()
    assert [e[n] for n in range(7)] == [FormalPolynomial.constant(Fraction(1, f))
                                        for f in (1, 1, 2, 6, 24, 120, 720)]
    with pytest.raises(TruncationOrderError):
        e[7]


def test_exp_of_log1p_is_1_plus_s():
    order = 8
    log1p = TruncatedSeries([ZERO] + [Fraction((-1) ** (k + 1), k) for k in range(1, order + 1)], order)
    out = log1p.exp()
    assert out[0] == ONE and out[1] == ONE
    assert all(out[n] == ZERO for n in range(2, order + 1))
