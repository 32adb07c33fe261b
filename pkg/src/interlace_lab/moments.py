"""Exact moments of soup local times and Gaussian fields, and the isomorphism checks.

Observables are :class:`FormalPolynomial` values over the variables
``("l", x)`` (soup local time at site x) and ``("g", x)`` (field value at x).
Soup and field are independent, so a monomial's expectation factors:

* field part: sum over perfect matchings of products of u (Isserlis),
* soup part: sum over set partitions of the points, alpha^(#blocks) times the
  product over blocks of the quasi-process moment
  sum_{orderings} prod u(consecutive differences).

Floats are used here (u comes out of quadrature); comparisons are relative.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DegreeBoundError, MismatchError
from .field import covariance_factor, wick_coefficients, wick_power
from .lattice import GreenTable, as_site
from .poly import ONE, ZERO, FormalPolynomial, X
from .reports import IdentityReport, mc_report, relative_close
from .sim import SoupSampler, as_seed_sequence, child_seq, child_stream
from .wick_algebra import rilt_polys_gf

MAX_GAUSSIAN_DEGREE = 8
MAX_SOUP_DEGREE = 6
ISO_RTOL = 1e-9


def lvar(x) -> tuple:
    return ("l", tuple(x))


def gvar(x) -> tuple:
    return ("g", tuple(x))


# set partitions and matchings

def set_partitions(n: int) -> Iterable[list[list[int]]]:
    """All set partitions of range(n), generated from restricted-growth strings."""
    if n == 0:
        yield []
        return
    a = [0] * n

    def rec(i, top):
        if i == n:
            blocks: list[list[int]] = [[] for _ in range(top + 1)]
            for idx, b in enumerate(a):
                blocks[b].append(idx)
            yield blocks
            return
        for b in range(top + 2):
            a[i] = b
            yield from rec(i + 1, max(top, b))

    a[0] = 0
    yield from rec(1, 0)


def perfect_matchings(items: Sequence) -> Iterable[list[tuple]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i in range(len(rest)):
        for m in perfect_matchings(rest[:i] + rest[i + 1:]):
            yield [(first, rest[i])] + m


class MomentOracle:
    """Exact moments for one Green table (u(x - y) for tabulated displacements)."""

    def __init__(self, table: GreenTable):
        self.table = table
        self.d = table.spec.dimension
        self._quasi_cache: dict = {}
        self._gauss_cache: dict = {}

    def u(self, x, y) -> float:
        return self.table.between(x, y)

    # quasi-process and soup moments

    def quasi_moment(self, points: Sequence) -> float:
        """sum over orderings pi of prod_j u(y_pi(j) - y_pi(j+1)); Hamiltonian-path DP."""
        pts = tuple(sorted(as_site(p, self.d) for p in points))
        k = len(pts)
        if k > 8:
            raise DegreeBoundError("quasi_moment supports at most 8 points")
        if k <= 1:
            return 1.0
        if pts in self._quasi_cache:
            return self._quasi_cache[pts]
        U = np.array([[self.u(a, b) for b in pts] for a in pts])
        full = (1 << k) - 1
        f = np.zeros((1 << k, k))
        for i in range(k):
            f[1 << i, i] = 1.0
        for mask in range(1, full + 1):
            for last in range(k):
                v = f[mask, last]
                if v == 0.0:
                    continue
                free = full & ~mask
                while free:
                    bit = free & -free
                    nxt = bit.bit_length() - 1
                    f[mask | bit, nxt] += v * U[last, nxt]
                    free ^= bit
        value = float(f[full].sum())
        self._quasi_cache[pts] = value
        return value

    def soup_moment_by_blocks(self, points: Sequence) -> list[float]:
        """c_j with E prod l(points) = sum_j c_j alpha^j (j = number of blocks)."""
        pts = [as_site(p, self.d) for p in points]
        coeffs = [0.0] * (len(pts) + 1)
        for blocks in set_partitions(len(pts)):
            prod = 1.0
            for b in blocks:
                prod *= self.quasi_moment([pts[i] for i in b])
            coeffs[len(blocks)] += prod
        if not pts:
            coeffs[0] = 1.0
        return coeffs

    def soup_moment(self, points: Sequence, alpha: float) -> float:
        if len(points) > 8:
            raise DegreeBoundError("soup_moment supports total multiplicity <= 8")
        return float(sum(c * alpha**j for j, c in enumerate(self.soup_moment_by_blocks(points))))

    def gaussian_moment(self, points: Sequence) -> float:
        pts = [as_site(p, self.d) for p in points]
        if len(pts) > 10:
            raise DegreeBoundError("gaussian_moment supports total degree <= 10")
        if len(pts) % 2:
            return 0.0
        key = tuple(sorted(pts))
        if key not in self._gauss_cache:
            self._gauss_cache[key] = float(sum(math.prod(self.u(a, b) for a, b in m)
                                               for m in perfect_matchings(list(key))))
        return self._gauss_cache[key]

    # polynomial observables

    def expectation(self, obs: FormalPolynomial, alpha: float,
                    max_gaussian: int = MAX_GAUSSIAN_DEGREE,
                    max_soup: int = MAX_SOUP_DEGREE) -> float:
        total = 0.0
        for mono, c in obs.terms.items():
            g_pts: list = []
            l_pts: list = []
            for (kind, site), e in mono:
                (g_pts if kind == "g" else l_pts).extend([site] * e)
            if len(g_pts) > max_gaussian or len(l_pts) > max_soup:
                raise DegreeBoundError(
                    f"monomial {mono} exceeds degree bounds (field {max_gaussian}, soup {max_soup})")
            if len(g_pts) % 2:
                continue
            total += float(c) * self.gaussian_moment(g_pts) * self.soup_moment(l_pts, alpha)
        return total


# the two sides of the isomorphism

def wick_poly(x, n: int, u0: float) -> FormalPolynomial:
    """:g_x^n: expanded into powers of g_x."""
    return sum((X(gvar(x), n - 2 * j) * (c * u0**j) for c, j in wick_coefficients(n)), ZERO)


@lru_cache(maxsize=None)
def _rilt_u(n: int) -> tuple:
    return tuple(rilt_polys_gf(max(n, 1)))


def rilt_local(x, m: int, u0: float) -> FormalPolynomial:
    """L_m(x) = B_m(l_x) with ch_j = u0^j."""
    poly = _rilt_u(m)[m]
    return poly.substitute({"L1": X(lvar(x)), "u": u0}).map_coefficients(float)


def build_lhs(n: int, x, u0: float) -> FormalPolynomial:
    """sum_j C(n,j) (:g^(2j):/2^j) L_{n-j}(x), evaluated under soup intensity alpha^2."""
    if n > 3:
        raise DegreeBoundError("build_lhs supports n <= 3")
    return sum((wick_poly(x, 2 * j, u0) * rilt_local(x, n - j, u0) * (math.comb(n, j) / 2**j)
                for j in range(n + 1)), ZERO)


def build_rhs(n: int, x, alpha: float, u0: float) -> FormalPolynomial:
    """J_n(x) = sum_j C(2n,j) alpha^(2n-j) :g^j: / 2^(j/2); field only."""
    if n > 3:
        raise DegreeBoundError("build_rhs supports n <= 3")
    return sum((wick_poly(x, j, u0) * (math.comb(2 * n, j) * alpha ** (2 * n - j) / 2 ** (j / 2))
                for j in range(2 * n + 1)), ZERO)


def build_plain_lhs(x) -> FormalPolynomial:
    """g^2/2 + l_x (un-Wicked n = 1 form)."""
    return X(gvar(x), 2) * 0.5 + X(lvar(x))


def build_plain_rhs(x, alpha: float) -> FormalPolynomial:
    """(g/sqrt 2 + alpha)^2."""
    return X(gvar(x), 2) * 0.5 + X(gvar(x)) * (math.sqrt(2) * alpha) + alpha**2


def multi_indices(n_sites: int, max_order: int) -> list[tuple[int, ...]]:
    return [a for total in range(1, max_order + 1)
            for a in itertools.product(range(total + 1), repeat=n_sites) if sum(a) == total]


def _moment_scale(u0: float, alpha: float, n: int, order: int) -> float:
    return (u0 + alpha**2 + 1e-300) ** (n * order)


def iso_verify(oracle: MomentOracle, n: int, sites: Sequence, alpha: float, max_order: int,
               form: str = "wick", rtol: float = ISO_RTOL) -> list[IdentityReport]:
    """Exact joint moments of the two sides, one report per multi-index.

    ``form='wick'`` compares the renormalized sides; ``form='plain'`` (n = 1
    only) compares g^2/2 + l against (g/sqrt 2 + alpha)^2.
    """
    sites = [as_site(s, oracle.d) for s in sites]
    u0 = oracle.table.u0
    if form == "plain":
        if n != 1:
            raise ValueError("the plain form exists only for n = 1")
        lhs = [build_plain_lhs(x) for x in sites]
        rhs = [build_plain_rhs(x, alpha) for x in sites]
    else:
        lhs = [build_lhs(n, x, u0) for x in sites]
        rhs = [build_rhs(n, x, alpha, u0) for x in sites]
    reports = []
    for idx in multi_indices(len(sites), max_order):
        left = right = ONE
        for a, pl, pr in zip(idx, lhs, rhs):
            left = left * pl**a
            right = right * pr**a
        el = oracle.expectation(left, alpha**2)
        er = oracle.expectation(right, 0.0)
        scale = max(abs(el), abs(er), 1e-12 * _moment_scale(u0, alpha, n, sum(idx)))
        ok = abs(el - er) <= rtol * scale
        reports.append(IdentityReport(f"iso_{form}",
                                      {"n": n, "alpha": alpha, "sites": [list(s) for s in sites],
                                       "multi_index": list(idx)},
                                      exact_lhs=el, exact_rhs=er, passed=ok))
    return reports


def iso_assert(oracle: MomentOracle, n: int, sites, alpha: float, max_order: int,
               form: str = "wick") -> list[IdentityReport]:
    reports = iso_verify(oracle, n, sites, alpha, max_order, form)
    for r in reports:
        if not r.passed:
            raise MismatchError(f"isomorphism moment mismatch at {r.parameters['multi_index']}: "
                                f"{r.exact_lhs} vs {r.exact_rhs}", detail=r.parameters["multi_index"])
    return reports


def _numeric_lhs(n: int, g: np.ndarray, ell: np.ndarray, u0: float) -> np.ndarray:
    out = np.zeros_like(g)
    for j in range(n + 1):
        b = _rilt_u(n - j)[n - j].substitute({"u": u0})
        Lm = sum(float(b.coefficient([("L1", p)])) * ell**p for p in range(n - j + 1))
        out = out + math.comb(n, j) * wick_power(g, 2 * j, u0) / 2**j * Lm
    return out


def _numeric_rhs(n: int, g: np.ndarray, alpha: float, u0: float) -> np.ndarray:
    return sum(math.comb(2 * n, j) * alpha ** (2 * n - j) * wick_power(g, j, u0) / 2 ** (j / 2)
               for j in range(2 * n + 1))


def iso_monte_carlo(oracle: MomentOracle, sampler: SoupSampler, n: int, alpha: float,
                    max_order: int, samples: int, seed) -> list[IdentityReport]:
    """Joint (soup at alpha^2, field) samples of both sides against the exact moments."""
    seq = as_seed_sequence(seed)
    sites = list(sampler.K)
    u0 = oracle.table.u0
    ell = np.array([sampler.local_times(alpha**2, child_seq(seq, 0, j)) for j in range(samples)])
    factor = covariance_factor(oracle.table, sites)
    g_soup = factor.sample(child_stream(seq, 1), samples)
    g_field = factor.sample(child_stream(seq, 2), samples)
    lhs = np.stack([_numeric_lhs(n, g_soup[:, i], ell[:, i], u0) for i in range(len(sites))], 1)
    rhs = np.stack([_numeric_rhs(n, g_field[:, i], alpha, u0) for i in range(len(sites))], 1)
    exact = {tuple(r.parameters["multi_index"]): r.exact_rhs
             for r in iso_verify(oracle, n, sites, alpha, max_order)}
    out = []
    for idx, target in exact.items():
        powers = np.array(idx)
        params = {"n": n, "alpha": alpha, "sites": [list(s) for s in sites],
                  "multi_index": list(idx), "samples": samples, "seed": str(seed)}
        out.append(mc_report("iso_mc_lhs", np.prod(lhs**powers, axis=1), target, dict(params)))
        out.append(mc_report("iso_mc_rhs", np.prod(rhs**powers, axis=1), target, dict(params)))
    return out


# direct moment formula for products of L_{n_i}

def _direct_rilt_moment(oracle: MomentOracle, ns: Sequence[int], sites: Sequence,
                        alpha: float, all_orderings: bool) -> float:
    """Partition sum with alternating label maps, without the prod n_i! prefactor."""
    n = sum(ns)
    labels = [m for m, c in enumerate(ns) for _ in range(c)]
    maps = set(itertools.permutations(labels))
    total = 0.0
    for blocks in set_partitions(n):
        inner = 0.0
        for pi in maps:
            prod = 1.0
            for b in blocks:
                orders = itertools.permutations(b) if all_orderings else [b]
                block_sum = 0.0
                for order in orders:
                    labs = [pi[i] for i in order]
                    if any(a == c for a, c in zip(labs, labs[1:])):
                        continue
                    block_sum += math.prod(oracle.u(sites[a], sites[c])
                                           for a, c in zip(labs, labs[1:]))
                prod *= block_sum
                if prod == 0.0:
                    break
            inner += prod
        total += alpha ** len(blocks) * inner
    return total


def expansion_rilt_moment(oracle: MomentOracle, ns: Sequence[int], sites: Sequence,
                          alpha: float) -> float:
    u0 = oracle.table.u0
    obs = ONE
    for m, x in zip(ns, (as_site(s, oracle.d) for s in sites)):
        obs = obs * rilt_local(x, m, u0)
    return oracle.expectation(obs, alpha, max_soup=8)


def rilt_moment_crosscheck(oracle: MomentOracle, ns: Sequence[int], sites: Sequence,
                           alpha: float) -> IdentityReport:
    """Oracle value next to two readings of the direct partition formula."""
    sites = [as_site(s, oracle.d) for s in sites]
    if len(ns) != len(sites):
        raise ValueError("one site per n_i")
    pref = math.prod(math.factorial(m) for m in ns)
    n = sum(ns)
    oracle_value = expansion_rilt_moment(oracle, ns, sites, alpha)
    as_written = pref * _direct_rilt_moment(oracle, ns, sites, alpha, all_orderings=False)
    all_orders = pref * _direct_rilt_moment(oracle, ns, sites, alpha, all_orderings=True)
    reconciled = all_orders / math.factorial(n)

    def ratio(v):
        return v / oracle_value if oracle_value else float("nan")

    detail = {
        "oracle": oracle_value,
        "direct_block_order": as_written,
        "direct_all_orderings": all_orders,
        "ratio_block_order": ratio(as_written),
        "ratio_all_orderings": ratio(all_orders),
        "all_orderings_over_n_factorial": reconciled,
    }
    ok = relative_close(reconciled, oracle_value, 1e-9, floor=1e-12)
    return IdentityReport("rilt_moment_crosscheck",
                          {"n": list(ns), "sites": [list(s) for s in sites], "alpha": alpha},
                          exact_lhs=detail, exact_rhs=oracle_value, passed=ok)


def profiles(total_max: int) -> list[tuple[int, ...]]:
    """Nonincreasing n-profiles with sum <= total_max."""
    out = []

    def rec(prefix, remaining, cap):
        if prefix:
            out.append(tuple(prefix))
        for m in range(min(cap, remaining), 0, -1):
            rec(prefix + [m], remaining - m, m)

    rec([], total_max, total_max)
    return out


# decomposition into single-path pieces

def rilt_numeric(m: int, u0: float):
    """Coefficients c_p with B_m(l) = sum_p c_p l^p under ch_j = u0^j."""
    poly = _rilt_u(m)[m].substitute({"u": u0})
    return [float(poly.coefficient([("L1", p)])) for p in range(m + 1)]


def _B(m: int, u0: float, value: float) -> float:
    return sum(c * value**p for p, c in enumerate(rilt_numeric(m, u0)))


def decomposition_terms(per_path: Sequence[float], n: int, u0: float) -> tuple[float, float]:
    """(B_n(sum l_w), sum over partitions D of K_{|D_1|..|D_q|}) for one soup."""
    lhs = _B(n, u0, float(sum(per_path)))
    cache = [[_B(m, u0, v) for v in per_path] for m in range(n + 1)]
    rhs = 0.0
    for blocks in set_partitions(n):
        sizes = [len(b) for b in blocks]
        for tup in itertools.permutations(range(len(per_path)), len(sizes)):
            rhs += math.prod(cache[s][w] for s, w in zip(sizes, tup))
    return lhs, rhs


def decomposition_check(soup, n_max: int, site, u0: float, rtol: float = 1e-9) -> IdentityReport:
    site = tuple(site)
    per_path = [t.occupation(site) for t in soup.trajectories]
    worst = 0.0
    rows = []
    for n in range(1, n_max + 1):
        lhs, rhs = decomposition_terms(per_path, n, u0)
        err = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300) if lhs or rhs else 0.0
        worst = max(worst, err)
        rows.append({"n": n, "L_n": lhs, "partition_sum": rhs})
    return IdentityReport("decomposition", {"site": list(site), "n_max": n_max,
                                            "paths": len(per_path), "seed": soup.seed},
                          exact_lhs=rows, exact_rhs=worst, passed=worst <= rtol)
