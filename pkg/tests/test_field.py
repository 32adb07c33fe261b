import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interlace_lab.errors import NotPositiveDefiniteError
from interlace_lab.field import (covariance_factor, generating_function_error, hermite_check,
                                 sample_field, shifted_wick, shifted_wick_check, wick_coefficients,
                                 wick_hermite, wick_laguerre_even, wick_power)
from interlace_lab.lattice import GreenTable, WalkSpec, green_table
from interlace_lab.moments import wick_poly
from interlace_lab.poly import ONE

U0 = 1 / math.sqrt(3)


def test_wick_coefficients_small():
    assert wick_coefficients(2) == [(1, 0), (-1, 1)]
    assert wick_coefficients(4) == [(1, 0), (-6, 1), (3, 2)]
    assert wick_power(1.5, 3, 0.5) == pytest.approx(1.5**3 - 3 * 0.5 * 1.5)


@settings(max_examples=50)
@given(g=st.floats(-4, 4), n=st.integers(0, 10), u0=st.floats(0.1, 3.0))
def test_three_routes_agree(g, n, u0):
    w = wick_power(g, n, u0)
    assert wick_hermite(g, n, u0) == pytest.approx(w, rel=1e-9, abs=1e-9 * u0 ** (n / 2))
    if n % 2 == 0:
        assert wick_laguerre_even(g, n // 2, u0) == pytest.approx(w, rel=1e-9, abs=1e-9 * u0 ** (n / 2))


def test_hermite_report():
    r = hermite_check(12, U0, np.linspace(-2, 2, 11))
    assert r.passed and r.to_dict()["pass"]


@pytest.mark.parametrize("c", [1.0, -1.0, 2.0, -2.0])
def test_shifted(c):
    assert shifted_wick_check(4, U0, c, np.linspace(-2, 2, 9)).passed


def test_shifted_wick_at_zero_shift_is_even_power():
    g = 0.7
    assert shifted_wick(g, 4, U0, 0.0) == pytest.approx(wick_power(g, 4, U0))


def test_generating_function():
    assert generating_function_error(np.linspace(-2, 2, 9), 0.3, U0, 12) < 1e-8


def test_wick_orthogonality(line_oracle):
    # E[:g^n: :g^m:] = delta_nm n! u0^n
    u0 = line_oracle.table.u0
    for n in range(5):
        for m in range(5):
            value = line_oracle.expectation(wick_poly((0,), n, u0) * wick_poly((0,), m, u0), 0.0)
            expect = math.factorial(n) * u0**n if n == m else 0.0
            assert value == pytest.approx(expect, abs=1e-12)


def test_factor_residual_and_jitter():
    t = green_table(WalkSpec.nearest_neighbor(2, 0.2), 3)
    f = covariance_factor(t, [(0, 0), (1, 0), (1, 1), (3, 3)])
    assert f.jitter == 0.0 and f.residual() < 1e-14
    s = sample_field(f, np.random.default_rng(0))
    assert s.to_csv().startswith("x0,x1,g\n")


def test_indefinite_covariance_raises():
    spec = WalkSpec.nearest_neighbor(1, 1.0)
    bad = GreenTable(spec, 1, {(0,): 1.0, (1,): 2.0, (-1,): 2.0})
    with pytest.raises(NotPositiveDefiniteError):
        covariance_factor(bad, [0, 1])


def test_singular_covariance_gets_small_jitter():
    spec = WalkSpec.nearest_neighbor(1, 1.0)
    flat = GreenTable(spec, 1, {(0,): 1.0, (1,): 1.0, (-1,): 1.0})
    f = covariance_factor(flat, [0, 1])
    assert 0 < f.jitter <= 1e-8


@pytest.mark.slow
def test_empirical_covariance(line_table):
    f = covariance_factor(line_table, [0, 1, 3])
    draws = f.sample(np.random.default_rng(12), 40000)
    emp = draws.T @ draws / len(draws)
    se = np.sqrt((f.covariance**2 + np.outer(np.diag(f.covariance), np.diag(f.covariance)))
                 / len(draws))
    assert np.all(np.abs(emp - f.covariance) < 4 * se)
