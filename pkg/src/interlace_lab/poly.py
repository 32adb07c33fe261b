"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by the
variable's ``repr``; variables are any hashable values (strings such as
``"L1"`` or tuples such as ``("l", (0,))``).  Coefficients are
``fractions.Fraction`` unless the caller mixes in floats, in which case
Python's numeric tower takes over (the moment oracle does this on purpose).
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping

from .errors import TruncationOrderError

Monomial = tuple[tuple[Hashable, int], ...]
ONE_MONOMIAL: Monomial = ()


def _key(var) -> str:
    return repr(var)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items(), key=lambda ve: _key(ve[0])))


def _exact(c):
    if isinstance(c, int):
        return Fraction(c)
    return c


class FormalPolynomial:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Any] | None = None):
        clean: dict[Monomial, Any] = {}
        for mono, c in (terms or {}).items():
            if c != 0:
                mono = tuple(sorted(((v, e) for v, e in mono if e), key=lambda ve: _key(ve[0])))
                clean[mono] = clean.get(mono, 0) + _exact(c)
                if clean[mono] == 0:
                    del clean[mono]
        self.terms = clean

    # construction
    @classmethod
    def constant(cls, c) -> "FormalPolynomial":
        return cls({ONE_MONOMIAL: c})

    @classmethod
    def var(cls, name: Hashable, power: int = 1) -> "FormalPolynomial":
        return cls({((name, power),): 1})

    @classmethod
    def lift(cls, other) -> "FormalPolynomial":
        return other if isinstance(other, FormalPolynomial) else cls.constant(other)

    # arithmetic
    def __add__(self, other):
        other = FormalPolynomial.lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return FormalPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return FormalPolynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-FormalPolynomial.lift(other))

    def __rsub__(self, other):
        return FormalPolynomial.lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, FormalPolynomial):
            if other == 0:
                return FormalPolynomial()
            return FormalPolynomial({m: c * _exact(other) for m, c in self.terms.items()})
        out: dict[Monomial, Any] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return FormalPolynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, int):
            scalar = Fraction(scalar)
        return FormalPolynomial({m: c / scalar for m, c in self.terms.items()})

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result, base = FormalPolynomial.constant(1), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, FormalPolynomial):
            other = FormalPolynomial.lift(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # inspection
    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def degree(self, var: Hashable | None = None) -> int:
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e for _, e in m) for m in self.terms)
        return max(dict(m).get(var, 0) for m in self.terms)

    def coefficient(self, monomial: Iterable[tuple[Hashable, int]] = ()) -> Any:
        mono = tuple(sorted(((v, e) for v, e in monomial if e), key=lambda ve: _key(ve[0])))
        return self.terms.get(mono, Fraction(0))

    def coefficient_of(self, var: Hashable, power: int) -> "FormalPolynomial":
        """The polynomial multiplying var^power (other variables kept)."""
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            if d.get(var, 0) == power:
                d.pop(var, None)
                out[tuple(d.items())] = c
        return FormalPolynomial(out)

    def first_difference(self, other: "FormalPolynomial"):
        """(monomial, self coeff, other coeff) for the first differing term, or None."""
        for m in sorted(set(self.terms) | set(other.terms), key=repr):
            a, b = self.terms.get(m, 0), other.terms.get(m, 0)
            if a != b:
                return (m, a, b)
        return None

    # evaluation and substitution
    def substitute(self, mapping: Mapping[Hashable, Any]) -> "FormalPolynomial":
        """Replace variables by polynomials or numbers (composition)."""
        out = FormalPolynomial()
        cache: dict = {}
        for m, c in self.terms.items():
            term = FormalPolynomial.constant(c)
            for v, e in m:
                if v in mapping:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = FormalPolynomial.lift(mapping[v]) ** e
                    term = term * cache[key]
                else:
                    term = term * FormalPolynomial.var(v, e)
            out = out + term
        return out

    def evaluate(self, env: Mapping[Hashable, Any] | Callable[[Hashable], Any]):
        get = env if callable(env) else env.__getitem__
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t = t * get(v) ** e
            total = total + t
        return total

    def map_coefficients(self, fn: Callable[[Any], Any]) -> "FormalPolynomial":
        return FormalPolynomial({m: fn(c) for m, c in self.terms.items()})

    # serialization
    def to_canonical(self) -> list:
        rows = []
        for m in sorted(self.terms, key=repr):
            c = self.terms[m]
            rows.append({"monomial": [[_var_json(v), e] for v, e in m],
                         "coefficient": str(c) if isinstance(c, Fraction) else c})
        return rows

    def to_json(self) -> str:
        return json.dumps(self.to_canonical(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FormalPolynomial":
        out = {}
        for row in json.loads(text):
            mono = tuple((_var_from_json(v), e) for v, e in row["monomial"])
            c = row["coefficient"]
            out[mono] = Fraction(c) if isinstance(c, str) else c
        return cls(out)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=repr):
            mono = "*".join(f"{_pretty(v)}^{e}" if e > 1 else _pretty(v) for v, e in m)
            parts.append(f"({self.terms[m]})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _pretty(v) -> str:
    return v if isinstance(v, str) else repr(v)


def _var_json(v):
    if isinstance(v, tuple):
        return [_var_json(x) for x in v]
    return v


def _var_from_json(v):
    if isinstance(v, list):
        return tuple(_var_from_json(x) for x in v)
    return v


X = FormalPolynomial.var
ZERO = FormalPolynomial()
ONE = FormalPolynomial.constant(1)


class TruncatedSeries:
    """sum_{n<=order} c_n s^n with FormalPolynomial coefficients."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Iterable, order: int):
        coeffs = [FormalPolynomial.lift(c) for c in coeffs][: order + 1]
        coeffs += [ZERO] * (order + 1 - len(coeffs))
        self.coeffs = coeffs
        self.order = order

    def __getitem__(self, n: int) -> FormalPolynomial:
        if n > self.order:
            raise TruncationOrderError(f"coefficient {n} requested beyond order {self.order}")
        return self.coeffs[n] if n >= 0 else ZERO

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        order = min(self.order, other.order)
        return TruncatedSeries([self[n] + other[n] for n in range(order + 1)], order)

    def scale(self, c) -> "TruncatedSeries":
        return TruncatedSeries([c * a for a in self.coeffs], self.order)

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        order = min(self.order, other.order)
        out = [ZERO] * (order + 1)
        for i in range(order + 1):
            if not self.coeffs[i]:
                continue
            for j in range(order + 1 - i):
                if other.coeffs[j]:
                    out[i + j] = out[i + j] + self.coeffs[i] * other.coeffs[j]
        return TruncatedSeries(out, order)

    def __pow__(self, n: int) -> "TruncatedSeries":
        result = TruncatedSeries([ONE], self.order)
        for _ in range(n):
            result = result * self
        return result

    def exp(self) -> "TruncatedSeries":
        """exp(g) for g with zero constant term: n f_n = sum_k k g_k f_{n-k}."""
        if self.coeffs[0]:
            raise ValueError("exp needs a series without constant term")
        f = [ONE] + [ZERO] * self.order
        for n in range(1, self.order + 1):
            acc = ZERO
            for k in range(1, n + 1):
                if self.coeffs[k]:
                    acc = acc + k * self.coeffs[k] * f[n - k]
            f[n] = acc / n
        return TruncatedSeries(f, self.order)


def factorial(n: int) -> Fraction:
    return Fraction(math.factorial(n))
