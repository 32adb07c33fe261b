"""Centered Gaussian field with covariance u(x - y) on a finite window, and Wick powers.

Wick powers use the explicit finite sum

    :g^n: = sum_j (-1)^j C(n, 2j) (2j)!/(j! 2^j) u0^j g^(n-2j)

with integer coefficients.  The Hermite and Laguerre forms are kept as
independent cross-checks (evaluated through numpy/scipy, not through this sum).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite as np_hermite
from scipy.special import eval_genlaguerre

from .errors import NotPositiveDefiniteError
from .lattice import GreenTable, Site, as_site
from .reports import IdentityReport

MAX_JITTER_FRACTION = 1e-8


@dataclass(frozen=True)
class CovarianceFactor:
    sites: tuple[Site, ...]
    covariance: np.ndarray
    lower: np.ndarray
    jitter: float

    def residual(self) -> float:
        """Max-norm of L L^T - (C + jitter I)."""
        target = self.covariance + self.jitter * np.eye(len(self.sites))
        return float(np.max(np.abs(self.lower @ self.lower.T - target)))

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """One draw of shape (|window|,), or ``size`` draws of shape (size, |window|)."""
        n = len(self.sites)
        z = rng.standard_normal(n if size is None else (size, n))
        return z @ self.lower.T


@dataclass(frozen=True)
class FieldSample:
    sites: tuple[Site, ...]
    values: tuple[float, ...]

    def __getitem__(self, site) -> float:
        return self.values[self.sites.index(tuple(site))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = len(self.sites[0]) if self.sites else 0
        writer.writerow([f"x{i}" for i in range(d)] + ["g"])
        for s, v in zip(self.sites, self.values):
            writer.writerow(list(s) + [repr(v)])
        return buf.getvalue()


def covariance_factor(table: GreenTable, window: Sequence) -> CovarianceFactor:
    """Cholesky factor of [u(x_i - x_j)], escalating diagonal jitter by decades if needed."""
    sites = tuple(dict.fromkeys(as_site(s, table.spec.dimension) for s in window))
    if not sites:
        raise ValueError("window must contain at least one site")
    if not table.covers(sites):
        raise ValueError("Green table does not cover the window")
    cov = table.gram(sites)
    cap = MAX_JITTER_FRACTION * table.u0
    jitter = 0.0
    scale = cap * 1e-8
    while True:
        try:
            lower = np.linalg.cholesky(cov + jitter * np.eye(len(sites)))
            return CovarianceFactor(sites, cov, lower, jitter)
        except np.linalg.LinAlgError:
            jitter = scale if jitter == 0.0 else jitter * 10.0
            if jitter > cap * (1 + 1e-12):
                raise NotPositiveDefiniteError(
                    f"covariance not positive definite with jitter up to {cap:.3g}"
                ) from None


def sample_field(factor: CovarianceFactor, rng: np.random.Generator) -> FieldSample:
    return FieldSample(factor.sites, tuple(factor.sample(rng).tolist()))


def wick_coefficients(n: int) -> list[tuple[int, int]]:
    """[(integer coefficient, j)] so that :g^n: = sum coef u0^j g^(n-2j)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return [((-1) ** j * math.comb(n, 2 * j) * math.factorial(2 * j)
             // (math.factorial(j) * 2**j), j) for j in range(n // 2 + 1)]


def wick_power(g, n: int, u0: float):
    """:g^n: for a Gaussian of variance u0 (scalar or array ``g``)."""
    if not u0 > 0:
        raise ValueError("u0 must be > 0")
    g = np.asarray(g, dtype=float)
    out = sum(c * u0**j * g ** (n - 2 * j) for c, j in wick_coefficients(n))
    return float(out) if out.ndim == 0 else out


def wick_hermite(g, n: int, u0: float):
    """(u0/2)^(n/2) H_n(g / sqrt(2 u0)) with physicists' Hermite H_n."""
    g = np.asarray(g, dtype=float)
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return (u0 / 2.0) ** (n / 2.0) * np_hermite.hermval(g / math.sqrt(2.0 * u0), coef)


def wick_laguerre_even(g, n: int, u0: float):
    """2^n (-u0)^n n! L_n^(-1/2)(g^2 / (2 u0)), which equals :g^(2n):."""
    g = np.asarray(g, dtype=float)
    return 2.0**n * (-u0) ** n * math.factorial(n) * eval_genlaguerre(n, -0.5, g * g / (2 * u0))


def _max_rel(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale))


def hermite_check(n_max: int, u0: float, g_grid, tol: float = 1e-10) -> IdentityReport:
    """Max error (relative, floored at 1) between the sum, Hermite and Laguerre routes."""
    if n_max > 12:
        raise ValueError("n_max must be <= 12")
    g = np.asarray(g_grid, dtype=float)
    herm = lag = 0.0
    for n in range(n_max + 1):
        direct = wick_power(g, n, u0)
        herm = max(herm, _max_rel(direct, wick_hermite(g, n, u0)))
        if n % 2 == 0:
            lag = max(lag, _max_rel(direct, wick_laguerre_even(g, n // 2, u0)))
    err = max(herm, lag)
    return IdentityReport("wick_hermite_laguerre",
                          {"n_max": n_max, "u0": u0, "grid_points": int(g.size)},
                          exact_lhs={"hermite_max_err": herm, "laguerre_max_err": lag},
                          exact_rhs=0.0, passed=err < tol)


def even_wick_polynomial(n: int) -> list[tuple[int, int]]:
    """P_n with :g^(2n): = P_n(g^2): list of (coefficient of u0^j, power of g^2)."""
    return [(c, n - j) for c, j in wick_coefficients(2 * n)]


def shifted_wick(g, m: int, u0: float, c: float):
    """:(G + c)^m: by the binomial Wick expansion sum_i C(m, i) :G^i: c^(m-i)."""
    return sum(math.comb(m, i) * wick_power(g, i, u0) * c ** (m - i) for i in range(m + 1))


def shifted_wick_check(n_max: int, u0: float, c: float, g_grid,
                       tol: float = 1e-10) -> IdentityReport:
    """:(G+c)^(2n): from the binomial expansion against P_n((G+c)^2)."""
    if n_max > 8:
        raise ValueError("n_max must be <= 8")
    g = np.asarray(g_grid, dtype=float)
    worst = 0.0
    for n in range(n_max + 1):
        lhs = shifted_wick(g, 2 * n, u0, c)
        y = (g + c) ** 2
        rhs = sum(coef * u0**j * y**p for (coef, p), j
                  in zip(even_wick_polynomial(n), range(n + 1)))
        worst = max(worst, _max_rel(lhs, rhs))
    return IdentityReport("shifted_wick", {"n_max": n_max, "u0": u0, "c": c},
                          exact_lhs=worst, exact_rhs=0.0, passed=worst < tol)


def generating_function_error(g, s: float, u0: float, order: int = 12) -> float:
    """|sum_{n<=order} s^n :g^n:/n! - exp(s g - s^2 u0 / 2)|, max over ``g``."""
    g = np.asarray(g, dtype=float)
    partial = sum(s**n * wick_power(g, n, u0) / math.factorial(n) for n in range(order + 1))
    return float(np.max(np.abs(partial - np.exp(s * g - s * s * u0 / 2))))
