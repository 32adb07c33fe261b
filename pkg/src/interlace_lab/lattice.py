"""Killed symmetric continuous-time random walk on Z^d and its potential theory.

The walk jumps at total rate 1 according to a symmetric kernel ``p`` and is
killed at rate ``kappa``.  Its potential density is

    u(x) = (2 pi)^{-d} int_{[-pi, pi]^d} cos(x . theta) / (kappa + psi(theta)) dtheta,
    psi(theta) = sum_e p(e) (1 - cos(e . theta)).

The integrand is analytic and periodic, so the trapezoidal rule on a uniform
grid converges geometrically; we double the grid until successive values
agree to the requested relative tolerance.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import NegativeWeightError, QuadratureError, SingularSystemError

Site = tuple[int, ...]

# Largest trapezoid grid (total points) tried before giving up.
MAX_GRID_POINTS = 2**24


def as_site(x, dimension: int) -> Site:
    """Coerce an int or a sequence of ints into a lattice site tuple."""
    if isinstance(x, (int, np.integer)):
        x = (int(x),)
    site = tuple(int(c) for c in x)
    if len(site) != dimension:
        raise ValueError(f"site {x!r} is not in Z^{dimension}")
    return site


def _sub(x: Site, y: Site) -> Site:
    return tuple(a - b for a, b in zip(x, y))


@dataclass(frozen=True)
class WalkSpec:
    """Symmetric jump kernel on Z^d with total jump rate 1 and killing rate kappa."""

    dimension: int
    kernel: tuple[tuple[Site, float], ...]
    kappa: float

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if not self.kappa > 0:
            raise ValueError("killing rate kappa must be > 0")
        probs = {}
        for e, pe in self.kernel:
            e = as_site(e, self.dimension)
            if not any(e):
                raise ValueError("kernel must not charge the origin")
            if pe < 0:
                raise ValueError("kernel weights must be nonnegative")
            probs[e] = probs.get(e, 0.0) + float(pe)
        if not math.isclose(sum(probs.values()), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("kernel weights must sum to 1")
        for e, pe in probs.items():
            neg = tuple(-c for c in e)
            if not math.isclose(probs.get(neg, 0.0), pe, rel_tol=0, abs_tol=1e-14):
                raise ValueError(f"kernel is not symmetric at {e}")
        canonical = tuple(sorted((e, pe) for e, pe in probs.items() if pe > 0))
        object.__setattr__(self, "kernel", canonical)

    @classmethod
    def nearest_neighbor(cls, dimension: int, kappa: float) -> "WalkSpec":
        steps = []
        for i in range(dimension):
            for sign in (1, -1):
                e = [0] * dimension
                e[i] = sign
                steps.append((tuple(e), 1.0 / (2 * dimension)))
        return cls(dimension, tuple(steps), float(kappa))

    @cached_property
    def steps(self) -> np.ndarray:
        return np.array([e for e, _ in self.kernel], dtype=np.int64)

    @cached_property
    def probs(self) -> np.ndarray:
        return np.array([pe for _, pe in self.kernel])

    @cached_property
    def step_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return cdf

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "kappa": self.kappa,
            "kernel": [{"step": list(e), "p": pe} for e, pe in self.kernel],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WalkSpec":
        kernel = tuple((tuple(k["step"]), k["p"]) for k in data["kernel"])
        return cls(int(data["dimension"]), kernel, float(data["kappa"]))


def characteristic_exponent(spec: WalkSpec, theta) -> np.ndarray | float:
    """psi(theta) = sum_e p(e) (1 - cos(e . theta)); vectorized over leading axes."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != spec.dimension:
        raise ValueError("theta has the wrong dimension")
    phase = theta @ spec.steps.T.astype(float)
    out = (1.0 - np.cos(phase)) @ spec.probs
    return float(out) if out.ndim == 0 else out


def _theta_grid(spec: WalkSpec, n: int) -> np.ndarray:
    axis = 2.0 * np.pi * np.arange(n) / n
    mesh = np.meshgrid(*([axis] * spec.dimension), indexing="ij")
    return np.stack(mesh, axis=-1)


def _initial_grid(radius: int) -> int:
    n = 16
    while n < 4 * max(radius, 1):
        n *= 2
    return n


def green(spec: WalkSpec, x, rtol: float = 1e-10) -> float:
    """u(x) by the periodic trapezoidal rule with grid doubling.

    Convergence is relative, with an absolute floor of 1e-14 u(0) (the same
    floor as ``green_table``): far-field values below round-off of the mean are
    accurate in absolute terms only.  Raises QuadratureError if the grid
    outgrows ``MAX_GRID_POINTS``.
    """
    site = np.array(as_site(x, spec.dimension), dtype=float)
    n = _initial_grid(int(np.max(np.abs(site), initial=0)))
    previous = None
    while n**spec.dimension <= MAX_GRID_POINTS:
        theta = _theta_grid(spec, n)
        psi = characteristic_exponent(spec, theta)
        inv = 1.0 / (spec.kappa + psi)
        value = float(np.mean(np.cos(theta @ site) * inv))
        floor = 1e-14 * float(np.mean(inv))
        if previous is not None and abs(value - previous) <= rtol * abs(value) + floor:
            return value
        previous = value
        n *= 2
    raise QuadratureError(
        f"green({tuple(site.astype(int))}) did not reach rtol={rtol} "
        f"within {MAX_GRID_POINTS} grid points"
    )


@dataclass(frozen=True)
class GreenTable:
    """u(x) on the box of displacements with sup-norm <= radius."""

    spec: WalkSpec
    radius: int
    values: dict = field(repr=False)
    grid_size: int = 0

    @property
    def u0(self) -> float:
        return self.values[(0,) * self.spec.dimension]

    def __call__(self, x) -> float:
        site = as_site(x, self.spec.dimension)
        try:
            return self.values[site]
        except KeyError:
            raise ValueError(
                f"displacement {site} lies outside the Green table (radius {self.radius})"
            ) from None

    def between(self, x, y) -> float:
        return self(_sub(as_site(x, self.spec.dimension), as_site(y, self.spec.dimension)))

    def covers(self, sites: Iterable) -> bool:
        sites = [as_site(s, self.spec.dimension) for s in sites]
        return all(
            max((abs(c) for c in _sub(a, b)), default=0) <= self.radius
            for a in sites
            for b in sites
        )

    def gram(self, sites: Sequence) -> np.ndarray:
        sites = [as_site(s, self.spec.dimension) for s in sites]
        return np.array([[self.between(a, b) for b in sites] for a in sites])

    def resolvent_residual(self) -> float:
        """max over interior x of |(kappa+1) u(x) - sum_e p(e) u(x-e) - 1{x=0}|."""
        reach = max(max(abs(c) for c in e) for e, _ in self.spec.kernel)
        worst = 0.0
        for x, ux in self.values.items():
            if max((abs(c) for c in x), default=0) > self.radius - reach:
                continue
            lhs = (self.spec.kappa + 1.0) * ux
            lhs -= sum(pe * self.values[_sub(x, e)] for e, pe in self.spec.kernel)
            lhs -= 1.0 if not any(x) else 0.0
            worst = max(worst, abs(lhs))
        return worst

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(self.spec.dimension)] + ["u"])
        for x in sorted(self.values):
            writer.writerow(list(x) + [repr(self.values[x])])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "spec": self.spec.to_dict(),
                "radius": self.radius,
                "grid_size": self.grid_size,
                "u0": self.u0,
                "entries": [{"x": list(x), "u": self.values[x]} for x in sorted(self.values)],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "GreenTable":
        data = json.loads(text)
        values = {tuple(e["x"]): float(e["u"]) for e in data["entries"]}
        return cls(WalkSpec.from_dict(data["spec"]), int(data["radius"]), values,
                   int(data.get("grid_size", 0)))


def green_table(spec: WalkSpec, radius: int, rtol: float = 1e-10) -> GreenTable:
    """Tabulate u on the box of radius ``radius`` with one FFT per grid size."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    d = spec.dimension
    offsets = list(itertools.product(range(-radius, radius + 1), repeat=d))
    n = _initial_grid(radius)
    previous = None
    while n**d <= MAX_GRID_POINTS:
        psi = characteristic_exponent(spec, _theta_grid(spec, n))
        table = np.fft.ifftn(1.0 / (spec.kappa + psi)).real
        current = np.array([table[tuple(c % n for c in x)] for x in offsets])
        if previous is not None:
            atol = 1e-14 * current.max()
            if np.all(np.abs(current - previous) <= rtol * np.abs(current) + atol):
                return GreenTable(spec, radius, dict(zip(offsets, current.tolist())), n)
        previous = current
        n *= 2
    raise QuadratureError(
        f"Green table of radius {radius} did not reach rtol={rtol} "
        f"within {MAX_GRID_POINTS} grid points"
    )


def nearest_neighbor_green_1d(kappa: float, x: int) -> float:
    """Closed form for d=1 nearest-neighbour: lambda^|x| / sqrt(kappa^2 + 2 kappa)."""
    a = 1.0 + kappa
    root = math.sqrt(a * a - 1.0)
    return (a - root) ** abs(x) / root


@dataclass(frozen=True)
class EquilibriumData:
    """Equilibrium measure e_K on a finite set K and its capacity."""

    sites: tuple[Site, ...]
    weights: np.ndarray
    residual: float

    @property
    def capacity(self) -> float:
        return float(self.weights.sum())

    @property
    def entrance_distribution(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def weight(self, x) -> float:
        return float(self.weights[self.sites.index(tuple(x))])

    def to_dict(self) -> dict:
        return {
            "K": [list(s) for s in self.sites],
            "e_K": self.weights.tolist(),
            "cap": self.capacity,
            "residual": self.residual,
        }


def equilibrium(table: GreenTable, K: Sequence, tol: float = 1e-12,
                max_condition: float = 1e12) -> EquilibriumData:
    """Solve sum_y u(x-y) e(y) = 1 for x in K by a dense direct solve."""
    sites = tuple(dict.fromkeys(as_site(s, table.spec.dimension) for s in K))
    if not sites:
        raise ValueError("K must contain at least one site")
    if not table.covers(sites):
        raise ValueError("Green table does not cover K - K")
    gram = table.gram(sites)
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularSystemError(
            f"Gram matrix on K is numerically singular (condition number {cond:.3g})"
        )
    weights = np.linalg.solve(gram, np.ones(len(sites)))
    if np.any(weights < -tol):
        raise NegativeWeightError(f"negative equilibrium weight {weights.min():.3g}")
    weights = np.clip(weights, 0.0, None)
    residual = float(np.max(np.abs(gram @ weights - 1.0)))
    return EquilibriumData(sites, weights, residual)


def hitting_potential(table: GreenTable, eq: EquilibriumData, y) -> float:
    """sum_{z in K} u(y - z) e_K(z): the probability that the walk from y hits K."""
    y = as_site(y, table.spec.dimension)
    return float(sum(table.between(y, z) * w for z, w in zip(eq.sites, eq.weights)))
