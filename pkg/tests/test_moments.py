import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interlace_lab.errors import DegreeBoundError
from interlace_lab.moments import (MomentOracle, decomposition_terms, expansion_rilt_moment,
                                   gvar, iso_assert, iso_verify, lvar, perfect_matchings,
                                   profiles, rilt_moment_crosscheck, set_partitions)
from interlace_lab.poly import X

U0 = 1 / math.sqrt(3)
U1 = U0 * (2 - math.sqrt(3))


def test_set_partitions_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 7)] == [1, 2, 5, 15, 52, 203]


def test_perfect_matching_counts():
    assert [sum(1 for _ in perfect_matchings(list(range(2 * k)))) for k in range(1, 5)] == [1, 3, 15, 105]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=1, max_size=6))
def test_quasi_moment_is_permutation_sum(line_oracle, pts):
    brute = sum(math.prod(line_oracle.u((a,), (b,)) for a, b in zip(p, p[1:]))
                for p in itertools.permutations(pts))
    assert line_oracle.quasi_moment([(p,) for p in pts]) == pytest.approx(brute, rel=1e-12)


def test_soup_moment_hand_values(line_oracle):
    a = 0.8
    assert line_oracle.soup_moment([(0,)], a) == pytest.approx(a)
    assert line_oracle.soup_moment([(0,)] * 2, a) == pytest.approx(a**2 + 2 * a * U0)
    assert line_oracle.soup_moment([(0,)] * 3, a) == pytest.approx(a**3 + 6 * a**2 * U0 + 6 * a * U0**2)
    assert line_oracle.soup_moment([(0,), (1,)], a) == pytest.approx(a**2 + 2 * a * U1)


def test_gaussian_moment_hand_values(line_oracle):
    assert line_oracle.gaussian_moment([(0,)] * 4) == pytest.approx(3 * U0**2)
    assert line_oracle.gaussian_moment([(0,), (0,), (1,), (1,)]) == pytest.approx(U0**2 + 2 * U1**2)
    assert line_oracle.gaussian_moment([(0,)] * 3) == 0.0


def test_expectation_mixed(line_oracle):
    obs = X(gvar((0,)), 2) * X(lvar((1,)))
    assert line_oracle.expectation(obs, 1.5) == pytest.approx(U0 * 1.5)


def test_degree_bounds(line_oracle):
    with pytest.raises(DegreeBoundError):
        line_oracle.expectation(X(lvar((0,)), 7), 1.0)
    with pytest.raises(DegreeBoundError):
        line_oracle.quasi_moment([(0,)] * 9)


def test_plain_isomorphism_hand_values(line_oracle):
    a = 1.0
    r = iso_verify(line_oracle, 1, [(0,)], a, 2, form="plain")
    assert r[0].exact_lhs == pytest.approx(U0 / 2 + a**2)
    assert r[1].exact_rhs == pytest.approx(0.75 * U0**2 + 3 * a**2 * U0 + a**4)
    assert all(x.passed for x in r)


@pytest.mark.parametrize("alpha", [0.0, 0.6, 1.3])
def test_isomorphism_two_sites(line_oracle, alpha):
    reports = iso_verify(line_oracle, 1, [(0,), (2,)], alpha, 3) + \
        iso_verify(line_oracle, 2, [(0,), (2,)], alpha, 2)
    assert all(r.passed for r in reports)


def test_iso_fails_at_wrong_intensity(line_oracle):
    # negative control: the soup side must run at alpha^2, not alpha
    alpha = 0.7
    rhs = iso_verify(line_oracle, 1, [(0,)], alpha, 1, form="plain")[0].exact_rhs
    at_alpha = line_oracle.expectation(X(gvar((0,)), 2) * 0.5 + X(lvar((0,))), alpha)
    assert at_alpha - rhs == pytest.approx(alpha - alpha**2)
    iso_assert(line_oracle, 1, [(0,)], alpha, 2, form="plain")


def test_rilt_first_moments(line_oracle):
    for n in range(1, 5):
        assert expansion_rilt_moment(line_oracle, [n], [(0,)], 0.9) == pytest.approx(0.9**n, rel=1e-12)


def test_rilt_crosscheck_normalization(line_oracle):
    r = rilt_moment_crosscheck(line_oracle, (2,), [(0,)], 0.7)
    assert r.passed
    assert r.exact_lhs["ratio_block_order"] == pytest.approx(2.0)
    r = rilt_moment_crosscheck(line_oracle, (1, 1), [(0,), (1,)], 0.7)
    assert r.passed and r.exact_lhs["ratio_all_orderings"] == pytest.approx(2.0)


def test_profiles():
    assert profiles(3) == [(3,), (2,), (2, 1), (1,), (1, 1), (1, 1, 1)]


def test_decomposition_two_paths():
    u0, a, b = 0.4, 0.3, 1.1
    lhs, rhs = decomposition_terms([a, b], 2, u0)
    assert lhs == pytest.approx((a + b) ** 2 - 2 * u0 * (a + b))
    assert rhs == pytest.approx(lhs)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 3), max_size=5), st.integers(1, 4))
def test_decomposition_random(per_path, n):
    lhs, rhs = decomposition_terms(per_path, n, 0.57)
    assert rhs == pytest.approx(lhs, rel=1e-9, abs=1e-9)
