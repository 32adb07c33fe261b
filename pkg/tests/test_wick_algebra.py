import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from interlace_lab import wick_algebra as wa
from interlace_lab.errors import MismatchError
from interlace_lab.moments import perfect_matchings
from interlace_lab.poly import X

ch1, ch2, ch3, L1 = X("ch1"), X("ch2"), X("ch3"), X("L1")


def test_low_order_rilt():
    L = wa.rilt_polys_recursive(4)
    assert L[1] == L1
    assert L[2] == L1**2 - 2 * ch1 * L1
    assert L[3] == L1**3 - 6 * ch1 * L1**2 + (12 * ch1**2 - 6 * ch2) * L1


def test_generating_function_toy():
    # exp(s L1 / (1 + s u)): [s^2] * 2! = L1^2 - 2 u L1
    gf = wa.rilt_polys_gf(3)
    assert gf[2] == L1**2 - 2 * X("u") * L1


def test_all_routes_n8():
    assert wa.gf_matches_recursion(8)
    assert wa.rilt_polys_recursive(8) == wa.rilt_polys_ljo(8)


def test_self_ilt_uses_its_own_variable():
    S = wa.self_ilt_polys(3)
    assert "SL1" in S[2].variables()


def test_coefficients():
    cy2, cy3 = X("cy2"), X("cy3")
    assert wa.coeff_B(2, 1) == 2 * ch1
    assert wa.coeff_B(3, 1) == 6 * ch2
    assert wa.coeff_A(2, 0) == cy2 / 2
    assert wa.coeff_A(3, 0) == cy3
    assert wa.coeff_A(3, 1) == 6 * ch2 + Fraction(3, 2) * cy2
    assert wa.coeff_A(4, 4) == X("H1") ** 0


def test_expansions():
    assert len(wa.wtilde_H(5)) == 6
    assert wa.check_B_expansion(8)


def test_cycles_need_order_two():
    with pytest.raises(ValueError):
        wa.cy(1)
    with pytest.raises(ValueError):
        wa.ChainSpec((), ((1, 1),))


def test_chain_spec_sizes():
    s = wa.ChainSpec((2, 1), ((3, 1),))
    assert (s.size, s.size_plus, s.chains) == (2 + 2 + 3, 4 + 3 + 3, 3)
    assert s.factorial_denominator() == 2
    assert s.label() == "(2,1;3:1)"


@settings(max_examples=60)
@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
def test_multinomial_identity(k, m, p):
    lhs, rhs = wa.multinomial_identity(k, m, p)
    assert lhs == rhs


def test_rho_examples_and_exhaustive():
    assert wa.rho(3, wa.ChainSpec((1,)), 2) == (math.comb(4, 2),) * 2
    assert wa.rho_exhaustive(6) == 762


def _brute_census(r, e):
    """Classify every admissible perfect matching by its component structure."""
    points = [("R", i, h) for i in range(r) for h in (1, 2)] + [("E", j, 0) for j in range(e)]
    census = {}
    for matching in perfect_matchings(points):
        if any(a[0] == b[0] == "R" and a[1] == b[1] for a, b in matching):
            continue
        partner = {}
        for a, b in matching:
            partner[a], partner[b] = b, a
        seen, chains, cycles = set(), {}, {}
        for start in [p for p in points if p[0] == "E"]:
            if start in seen:
                continue
            edges, cur = 0, start
            while True:
                seen.add(cur)
                nxt = partner[cur]
                seen.add(nxt)
                edges += 1
                if nxt[0] == "E":
                    break
                cur = ("R", nxt[1], 3 - nxt[2])
            chains[edges] = chains.get(edges, 0) + 1
        for start in points:
            if start in seen:
                continue
            edges, cur = 0, start
            while True:
                seen.add(cur)
                nxt = partner[cur]
                seen.add(nxt)
                edges += 1
                cur = ("R", nxt[1], 3 - nxt[2])
                if cur == start:
                    break
            cycles[edges] = cycles.get(edges, 0) + 1
        k = tuple(chains.get(i, 0) for i in range(1, max(chains, default=0) + 1))
        key = wa.ChainSpec(k, tuple(cycles.items()))
        census[key] = census.get(key, 0) + 1
    return census


@pytest.mark.parametrize("r,e", [(1, 0), (2, 0), (3, 0), (0, 2), (1, 2), (2, 2), (3, 2), (0, 4), (1, 4)])
def test_census_matches_brute_force(r, e):
    assert wa.enumerate_pairings(r, e) == _brute_census(r, e)


def test_count_formula_index_start():
    one_chain = wa.ChainSpec((1,))
    assert wa.enumerate_pairings(0, 2) == {one_chain: 1}
    assert wa.pairing_count_formula(0, 2, one_chain) == 1
    assert wa.pairing_count_formula(0, 2, one_chain, printed=True) == 2


@pytest.mark.slow
def test_full_pairing_census():
    assert wa.all_pairing_checks(5, 6) == 23


def test_pairing_sum_mismatch_detected():
    values = {f"ch{i}": Fraction(i + 1) for i in range(1, 8)}
    values.update({f"cy{i}": Fraction(i, 3) for i in range(2, 8)})
    direct, closed = wa.pairing_sum_check(2, 2, values)
    assert direct == closed
    census = wa.enumerate_pairings(2, 2)
    assert sum(census.values()) == sum(1 for m in perfect_matchings(list(range(6)))
                                       if (0, 1) not in m and (2, 3) not in m)
