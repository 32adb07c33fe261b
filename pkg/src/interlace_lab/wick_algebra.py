"""Exact-rational algebra of renormalized intersection local times.

Indeterminates are plain strings: ``L1`` (total local time), ``H1``, ``u``
(the potential at 0), ``chK`` for the chain function of order K >= 1 and
``cyK`` for the cycle function of order K >= 2.  ``ch0`` is the constant 1
and a cycle of order one does not exist, so ``cy(1)`` raises.

Every identity is checked by two independent routes; disagreement raises
:class:`MismatchError` carrying the first differing coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .errors import MismatchError, TruncationOrderError
from .poly import ONE, ZERO, FormalPolynomial, TruncatedSeries, X

SERIES_ORDER = 10


def ch(j: int) -> FormalPolynomial:
    if j < 0:
        raise ValueError("chain order must be >= 0")
    return ONE if j == 0 else X(f"ch{j}")


def cy(j: int) -> FormalPolynomial:
    if j < 2:
        raise ValueError("there are no cycles of order < 2")
    return X(f"cy{j}")


def toy_substitution(n: int) -> dict:
    """ch_j -> u^j for j <= n (the lattice model, where every chain is u^j)."""
    return {f"ch{j}": X("u", j) for j in range(1, n + 1)}


@dataclass(frozen=True)
class ChainSpec:
    """sigma = (k_1, k_2, ...; m_2, m_3, ...): chain and cycle multiplicities."""

    k: tuple[int, ...] = ()
    m: tuple[tuple[int, int], ...] = ()  # (order j >= 2, m_j)

    def __post_init__(self):
        k = tuple(self.k)
        while k and k[-1] == 0:
            k = k[:-1]
        m = tuple(sorted((j, c) for j, c in self.m if c))
        if any(j < 2 for j, _ in m):
            raise ValueError("cycles of order one are not allowed")
        if any(c < 0 for c in k) or any(c < 0 for _, c in m):
            raise ValueError("multiplicities must be nonnegative")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "m", m)

    def k_of(self, i: int) -> int:
        return self.k[i - 1] if 1 <= i <= len(self.k) else 0

    @property
    def size(self) -> int:
        return sum(i * c for i, c in enumerate(self.k, 1)) + sum(j * c for j, c in self.m)

    @property
    def size_plus(self) -> int:
        return sum((i + 1) * c for i, c in enumerate(self.k, 1)) + sum(j * c for j, c in self.m)

    @property
    def chains(self) -> int:
        return sum(self.k)

    def factorial_denominator(self) -> int:
        out = 1
        for c in self.k:
            out *= math.factorial(c)
        for _, c in self.m:
            out *= math.factorial(c)
        return out

    def weight(self) -> FormalPolynomial:
        """prod ch_i^{k_i} prod (cy_j / 2j)^{m_j}."""
        out = ONE
        for i, c in enumerate(self.k, 1):
            out = out * ch(i) ** c
        for j, c in self.m:
            out = out * (cy(j) / (2 * j)) ** c
        return out

    def label(self) -> str:
        ks = ",".join(map(str, self.k)) or "0"
        ms = ",".join(f"{j}:{c}" for j, c in self.m)
        return f"({ks};{ms})"


def chain_specs(max_plus: int, cycles: bool = False) -> list[ChainSpec]:
    """All sigma with |sigma|_+ <= max_plus (cycles allowed if ``cycles``)."""
    parts = [("k", i, i + 1) for i in range(1, max_plus)]
    if cycles:
        parts += [("m", j, j) for j in range(2, max_plus + 1)]
    out = []

    def rec(idx, budget, ks, ms):
        if idx == len(parts):
            out.append(ChainSpec(tuple(ks), tuple(ms.items())))
            return
        kind, order, cost = parts[idx]
        for c in range(budget // cost + 1):
            if kind == "k":
                rec(idx + 1, budget - c * cost, ks + [c], ms)
            else:
                rec(idx + 1, budget - c * cost, ks, {**ms, order: c})

    rec(0, max_plus, [], {})
    return out


def _raise_mismatch(what: str, a: FormalPolynomial, b: FormalPolynomial):
    diff = a.first_difference(b)
    if diff is not None:
        raise MismatchError(f"{what}: routes disagree at monomial {diff[0]} "
                            f"({diff[1]} vs {diff[2]})", detail=diff)


# renormalized intersection local time polynomials

def rilt_polys_gf(n_max: int, order: int = SERIES_ORDER) -> list[FormalPolynomial]:
    """L_n(L1, u) from sum s^n L_n / n! = exp(s L1 / (1 + s u))."""
    if n_max > order:
        raise TruncationOrderError(f"n_max={n_max} exceeds series order {order}")
    t = TruncatedSeries([ZERO] + [X("u", k) * (-1) ** k for k in range(n_max)], n_max)
    series = t.scale(X("L1")).exp()
    return [series[n] * math.factorial(n) for n in range(n_max + 1)]


def _recursion(n_max: int, var: str) -> list[FormalPolynomial]:
    specs = chain_specs(n_max)
    out = [ONE, X(var)]
    for n in range(2, n_max + 1):
        value = X(var) ** n
        for s in specs:
            if 1 <= s.size < s.size_plus <= n:
                coef = Fraction(math.factorial(n),
                                s.factorial_denominator() * math.factorial(n - s.size_plus))
                value = value - s.weight() * out[n - s.size] * coef
        out.append(value)
    return out[: n_max + 1]


def chain_series(order: int) -> TruncatedSeries:
    """C(t) = sum_{j>=0} ch_j t^(j+1)."""
    return TruncatedSeries([ZERO] + [ch(j) for j in range(order)], order)


def rilt_polys_ljo(n_max: int, var: str = "L1") -> list[FormalPolynomial]:
    """B_N(L1) from sum_n C(t)^n B_n / n! = exp(t L1), solved order by order."""
    c = chain_series(n_max)
    powers = [TruncatedSeries([ONE], n_max)]
    for _ in range(n_max):
        powers.append(powers[-1] * c)
    out = [ONE]
    for N in range(1, n_max + 1):
        value = X(var) ** N / math.factorial(N)
        for n in range(N):
            value = value - powers[n][N] * out[n] / math.factorial(n)
        out.append(value * math.factorial(N))
    return out


def rilt_polys_recursive(n_max: int) -> list[FormalPolynomial]:
    """L_n(L1, ch) by the subtraction recursion, asserted equal to the ljo route."""
    if n_max > 8:
        raise ValueError("n_max must be <= 8")
    rec = _recursion(n_max, "L1")
    gf = rilt_polys_ljo(n_max)
    for n, (a, b) in enumerate(zip(rec, gf)):
        _raise_mismatch(f"L_{n} recursion vs generating function", a, b)
    return rec


def self_ilt_polys(n_max: int) -> list[FormalPolynomial]:
    """Single-path polynomials in ``SL1``; same recursion, asserted equal after renaming."""
    if n_max > 8:
        raise ValueError("n_max must be <= 8")
    own = _recursion(n_max, "SL1")
    soup = rilt_polys_recursive(n_max)
    for n, (a, b) in enumerate(zip(own, soup)):
        _raise_mismatch(f"self L_{n} vs L_{n}", a.substitute({"SL1": X("L1")}), b)
    return own


def gf_matches_recursion(n_max: int = 8) -> bool:
    gf = rilt_polys_gf(n_max)
    rec = rilt_polys_recursive(n_max)
    sub = toy_substitution(n_max)
    for n in range(n_max + 1):
        _raise_mismatch(f"L_{n} generating function vs recursion", gf[n], rec[n].substitute(sub))
    return True


# expansion coefficients

def _compositions(total: int, parts: int, minimum: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of ``parts`` integers >= minimum summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in _compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


def coeff_B(n: int, k: int) -> FormalPolynomial:
    """(n!/k!) sum over j_1..j_k >= 0 with sum (j_b + 1) = n of prod ch_{j_b}."""
    out = ZERO
    for js in _compositions(n, k, 1):
        term = ONE
        for j in js:
            term = term * ch(j - 1)
        out = out + term
    return out * Fraction(math.factorial(n), math.factorial(k))


def coeff_A(n: int, k: int) -> FormalPolynomial:
    """(n!/k!) sum_r (1/r!) sum over cycle orders i_a >= 2 and chains j_b >= 0."""
    out = ZERO
    for r in range(n // 2 + 1):
        for cyc_total in range(2 * r, n - k + 1):
            for iis in _compositions(cyc_total, r, 2):
                cyc = ONE
                for i in iis:
                    cyc = cyc * cy(i) / (2 * i)
                out = out + cyc * coeff_B(n - cyc_total, k) / math.factorial(r) * Fraction(
                    math.factorial(n), math.factorial(n - cyc_total))
    return out


def wtilde_H(n_max: int) -> list[FormalPolynomial]:
    """H~_n by subtraction over sigma with cycles; asserts H1^n = sum_k A_{n,k} H~_k."""
    specs = chain_specs(n_max, cycles=True)
    out = [ONE, X("H1")]
    for n in range(2, n_max + 1):
        value = X("H1") ** n
        for s in specs:
            if 1 <= s.size <= s.size_plus <= n:
                coef = Fraction(math.factorial(n),
                                s.factorial_denominator() * math.factorial(n - s.size_plus))
                value = value - s.weight() * out[n - s.size] * coef
        out.append(value)
    out = out[: n_max + 1]
    for n in range(n_max + 1):
        rhs = sum((coeff_A(n, k) * out[k] for k in range(n + 1)), ZERO)
        _raise_mismatch(f"H1^{n} expansion", X("H1") ** n, rhs)
    return out


def check_B_expansion(n_max: int = 8) -> bool:
    L = rilt_polys_recursive(n_max)
    for n in range(n_max + 1):
        rhs = sum((coeff_B(n, k) * L[k] for k in range(n + 1)), ZERO)
        _raise_mismatch(f"L1^{n} expansion", X("L1") ** n, rhs)
    return True


# rho and the multinomial identity

def multinomial(m: int, parts: tuple[int, ...]) -> int:
    if any(p < 0 for p in parts) or sum(parts) != m:
        return 0
    out = math.factorial(m)
    for p in parts:
        out //= math.factorial(p)
    return out


def _inner(k_minus_s: int, m: int) -> int:
    total = 0
    for v in range(k_minus_s + 1):
        if (k_minus_s - v) % 2:
            continue
        i = (k_minus_s - v) // 2
        total += multinomial(m, (i, v, m - i - v)) * 2**v
    return total


def multinomial_identity(k: int, m: int, p: int) -> tuple[int, int]:
    if min(k, m, p) < 0:
        raise ValueError("k, m, p must be >= 0")
    lhs = sum(math.comb(2 * p, s) * _inner(k - s, m) for s in range(min(2 * p, k) + 1))
    return lhs, math.comb(2 * m + 2 * p, k)


def rho(n: int, sigma: ChainSpec, k: int) -> tuple[int, int]:
    """(sum route, closed form C(2(n-|sigma|), k)); raises MismatchError if they differ."""
    if not 0 <= sigma.size <= sigma.size_plus <= n:
        raise ValueError("need 0 <= |sigma| <= |sigma|_+ <= n")
    lhs, _ = multinomial_identity(k, n - sigma.size_plus, sigma.chains)
    rhs = math.comb(2 * (n - sigma.size), k)
    if lhs != rhs:
        raise MismatchError(f"rho{sigma.label()} at n={n}, k={k}: {lhs} != {rhs}",
                            detail=(n, sigma.label(), k))
    return lhs, rhs


def rho_exhaustive(n_max: int = 6) -> int:
    """Checks every (n <= n_max, sigma, k); returns the number of cases."""
    cases = 0
    for n in range(n_max + 1):
        for s in chain_specs(n, cycles=True):
            for k in range(2 * n + 2):
                rho(n, s, k)
                cases += 1
    return cases


# pairings of (R x {1,2}) u S u U

def enumerate_pairings(r: int, e: int) -> dict[ChainSpec, int]:
    """Census of pairings of R x {1,2} plus e endpoints with no self-pair, by sigma.

    Components are followed one at a time: a chain starts at the lowest unused
    endpoint, a cycle at the lowest untouched R site once endpoints are used up.
    Every pairing is reached exactly once.
    """
    if e % 2:
        raise ValueError("|S| + |U| must be even")
    census: dict[ChainSpec, int] = {}
    chains: list[int] = []
    cycles: list[int] = []

    def record():
        k = [0] * max(chains, default=0)
        for c in chains:
            k[c - 1] += 1
        m: dict[int, int] = {}
        for c in cycles:
            m[c] = m.get(c, 0) + 1
        key = ChainSpec(tuple(k), tuple(m.items()))
        census[key] = census.get(key, 0) + 1

    def start(ends: int, free: tuple[int, ...]):
        if ends:
            walk_chain(ends - 1, free, 0)
        elif free:
            walk_cycle(free[1:], 1)
        else:
            record()

    def walk_chain(ends: int, free: tuple[int, ...], edges: int):
        # the open point pairs with another endpoint or with a half of a free R site
        for _other in range(ends):
            chains.append(edges + 1)
            start(ends - 1, free)
            chains.pop()
        for idx in range(len(free)):
            rest = free[:idx] + free[idx + 1:]
            for _half in (1, 2):
                walk_chain(ends, rest, edges + 1)

    def walk_cycle(free: tuple[int, ...], size: int):
        if size >= 2:
            cycles.append(size)
            start(0, free)
            cycles.pop()
        for idx in range(len(free)):
            rest = free[:idx] + free[idx + 1:]
            for _half in (1, 2):
                walk_cycle(rest, size + 1)

    start(e, tuple(range(r)))
    return census


def pairing_count_formula(r: int, e: int, sigma: ChainSpec, printed: bool = False) -> Fraction:
    """Number of pairings decomposing as sigma.

    ``printed=True`` reproduces the displayed count, whose chain products and
    2^(sum k_l) start at l = 2; the default runs those over every l >= 1.
    """
    start = 2 if printed else 1
    denom = Fraction(1)
    for j, c in sigma.m:
        denom *= Fraction(math.factorial(j)) ** c * math.factorial(c)
    for l, c in enumerate(sigma.k, 1):
        if l >= start:
            denom *= Fraction(math.factorial(l - 1)) ** c * math.factorial(c)
    value = Fraction(math.factorial(r)) / denom
    for j, c in sigma.m:
        value *= Fraction(math.factorial(j - 1), 2) ** c
    for l, c in enumerate(sigma.k, 1):
        value *= Fraction(math.factorial(l - 1)) ** c
    halves = sum(c for l, c in enumerate(sigma.k, 1) if l >= start)
    return value * Fraction(math.factorial(e), 2**halves) * 2**r


def pairing_census_check(r: int, e: int) -> dict:
    """Census vs the count formula for every sigma with |sigma|_+ = r + e."""
    census = enumerate_pairings(r, e)
    for s, count in census.items():
        if s.size_plus != r + e or s.chains * 2 != e:
            raise MismatchError(f"pairing decomposed into impossible sigma {s.label()}",
                                detail=s.label())
    for s in chain_specs(r + e, cycles=True):
        if s.size_plus != r + e or 2 * s.chains != e:
            continue
        formula = pairing_count_formula(r, e, s)
        if census.get(s, 0) != formula:
            raise MismatchError(f"pairing count for sigma={s.label()} (|R|={r}, |S|+|U|={e}): "
                                f"census {census.get(s, 0)} vs formula {formula}",
                                detail=s.label())
    return {s.label(): c for s, c in sorted(census.items(), key=lambda sc: sc[0].label())}


def pairing_sum_check(r: int, e: int, values: dict[str, Fraction]) -> tuple[Fraction, Fraction]:
    """Direct pairing sum (1/2^r) sum_P prod ch prod cy vs the sigma-sum closed form."""
    census = enumerate_pairings(r, e)

    def plain(s: ChainSpec) -> Fraction:
        out = Fraction(1)
        for i, c in enumerate(s.k, 1):
            out *= Fraction(values[f"ch{i}"]) ** c
        for j, c in s.m:
            out *= Fraction(values[f"cy{j}"]) ** c
        return out

    direct = sum((count * plain(s) for s, count in census.items()), Fraction(0)) / 2**r
    closed = Fraction(0)
    for s in chain_specs(r + e, cycles=True):
        if s.size_plus != r + e or 2 * s.chains != e:
            continue
        w = s.weight().evaluate(lambda v: Fraction(values[v]))
        closed += (Fraction(math.factorial(r) * math.factorial(e),
                            2**s.chains * s.factorial_denominator()) * w)
    if direct != closed:
        raise MismatchError(f"pairing sum (|R|={r}, |S|+|U|={e}): {direct} != {closed}",
                            detail=(r, e))
    return direct, closed


def all_pairing_checks(r_max: int = 5, e_max: int = 6) -> int:
    cases = 0
    for r in range(r_max + 1):
        for e in range(0, e_max + 1, 2):
            if r + e == 0:
                continue
            pairing_census_check(r, e)
            cases += 1
    return cases
