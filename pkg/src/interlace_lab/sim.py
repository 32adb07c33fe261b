"""Random interlacement soup restricted to the trajectories that hit a finite set K.

A trajectory is sampled as: entrance x0 ~ e_K / cap(K); a forward walk from
x0; a backward walk from x0 conditioned (by rejection) never to return to K.
The holding interval at x0 belongs to the forward part, so the bilateral path
first hits K at time 0.

Randomness: every call takes a ``numpy.random.SeedSequence``.  The Poisson
count uses the child key ``(0,)`` and trajectory ``i`` the child key
``(i + 1,)``, so a soup does not depend on the order in which trajectories are
drawn.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DivergenceError, RejectionBudgetExceeded
from .lattice import (EquilibriumData, GreenTable, Site, WalkSpec, as_site, equilibrium,
                      green_table)
from .reports import IdentityReport, mc_report

DEFAULT_MAX_ATTEMPTS = 100_000


def child_stream(seq: np.random.SeedSequence, *key: int) -> np.random.Generator:
    """Generator for the child ``key`` of ``seq`` without mutating ``seq``."""
    child = np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + key,
                                   pool_size=seq.pool_size)
    return np.random.Generator(np.random.PCG64(child))


def child_seq(seq: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + key,
                                  pool_size=seq.pool_size)


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class Segment:
    """Visited sites and holding times, in path order."""

    sites: tuple[Site, ...]
    holding: tuple[float, ...]

    def __len__(self):
        return len(self.sites)

    def occupation(self, site: Site) -> float:
        return sum(h for s, h in zip(self.sites, self.holding) if s == site)

    def to_dict(self) -> dict:
        return {"sites": [list(s) for s in self.sites], "holding": list(self.holding)}

    @classmethod
    def from_dict(cls, data: dict) -> "Segment":
        return cls(tuple(tuple(s) for s in data["sites"]), tuple(data["holding"]))


EMPTY = Segment((), ())


@dataclass(frozen=True)
class Trajectory:
    entrance: Site
    forward: Segment
    backward: Segment

    def occupation(self, site: Site) -> float:
        return self.forward.occupation(site) + self.backward.occupation(site)

    @property
    def lifetime(self) -> float:
        return sum(self.forward.holding) + sum(self.backward.holding)

    def to_dict(self) -> dict:
        return {"entrance": list(self.entrance), "forward": self.forward.to_dict(),
                "backward": self.backward.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        return cls(tuple(data["entrance"]), Segment.from_dict(data["forward"]),
                   Segment.from_dict(data["backward"]))


@dataclass(frozen=True)
class Soup:
    alpha: float
    K: tuple[Site, ...]
    trajectories: tuple[Trajectory, ...]
    seed: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.trajectories)

    def to_json(self) -> str:
        return json.dumps({
            "alpha": self.alpha,
            "K": [list(s) for s in self.K],
            "count": self.count,
            "seed": self.seed,
            "trajectories": [t.to_dict() for t in self.trajectories],
        })

    @classmethod
    def from_json(cls, text: str) -> "Soup":
        data = json.loads(text)
        return cls(float(data["alpha"]), tuple(tuple(s) for s in data["K"]),
                   tuple(Trajectory.from_dict(t) for t in data["trajectories"]),
                   data.get("seed", {}))


@dataclass(frozen=True)
class LocalTimeField:
    sites: tuple[Site, ...]
    values: tuple[float, ...]

    def __getitem__(self, site) -> float:
        return self.values[self.sites.index(tuple(site))]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = len(self.sites[0]) if self.sites else 0
        writer.writerow([f"x{i}" for i in range(d)] + ["L1"])
        for s, v in zip(self.sites, self.values):
            writer.writerow(list(s) + [repr(v)])
        return buf.getvalue()


def _walk(spec: WalkSpec, start: np.ndarray, rng: np.random.Generator,
          n_events: int) -> tuple[np.ndarray, np.ndarray]:
    """``n_events`` holding intervals of a free walk started at ``start``."""
    holding = rng.standard_exponential(n_events) / (1.0 + spec.kappa)
    jumps = spec.step_cdf.searchsorted(rng.random(n_events - 1), side="right")
    path = np.empty((n_events, spec.dimension), dtype=np.int64)
    path[0] = start
    np.cumsum(spec.steps[jumps], axis=0, out=path[1:])
    path[1:] += start
    return path, holding


def _n_events(spec: WalkSpec, rng: np.random.Generator) -> int:
    # each event kills with probability kappa/(1+kappa), else jumps
    return int(rng.geometric(spec.kappa / (1.0 + spec.kappa)))


def _segment(path: np.ndarray, holding: np.ndarray) -> Segment:
    return Segment(tuple(map(tuple, path.tolist())), tuple(holding.tolist()))


def forward_walk(spec: WalkSpec, x0, rng: np.random.Generator) -> Segment:
    """Free killed walk from x0: Exp(1+kappa) holds, killed w.p. kappa/(1+kappa) per event."""
    start = np.array(as_site(x0, spec.dimension), dtype=np.int64)
    return _segment(*_walk(spec, start, rng, _n_events(spec, rng)))


def backward_attempt(spec: WalkSpec, K: np.ndarray, x0, rng: np.random.Generator):
    """One rejection attempt.

    Returns ``(segment or None, killed_at_first_event)``.  The hold at x0 is
    dropped; the remaining path is accepted iff it never enters K.
    """
    start = np.asarray(x0, dtype=np.int64)
    n = _n_events(spec, rng)
    if n == 1:
        return EMPTY, True
    path, holding = _walk(spec, start, rng, n)
    rest = path[1:]
    hits = (rest[:, None, :] == K[None, :, :]).all(axis=2).any()
    if hits:
        return None, False
    return _segment(rest, holding[1:]), False


def backward_walk(spec: WalkSpec, K: Sequence, x0, rng: np.random.Generator,
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Segment:
    """Walk from x0 conditioned never to return to K, by rejection."""
    K_arr = np.array([as_site(s, spec.dimension) for s in K], dtype=np.int64)
    if as_site(x0, spec.dimension) not in set(map(tuple, K_arr.tolist())):
        raise ValueError("backward walk must start inside K")
    return _conditioned(spec, K_arr, x0, rng, max_attempts)


def _conditioned(spec, K_arr, x0, rng, max_attempts):
    for _ in range(max_attempts):
        segment, _killed = backward_attempt(spec, K_arr, x0, rng)
        if segment is not None:
            return segment
    raise RejectionBudgetExceeded(
        f"no path from {tuple(x0)} avoided K within {max_attempts} attempts"
    )


class SoupSampler:
    """Precomputes e_K and cap(K) once; draws independent soups."""

    def __init__(self, spec: WalkSpec, K: Sequence, table: GreenTable | None = None,
                 max_attempts: int = DEFAULT_MAX_ATTEMPTS):
        self.spec = spec
        self.K = tuple(dict.fromkeys(as_site(s, spec.dimension) for s in K))
        if table is None:
            radius = max((max(abs(a - b) for a, b in zip(x, y))
                          for x in self.K for y in self.K), default=0)
            table = green_table(spec, max(radius, 1))
        self.table = table
        self.equilibrium: EquilibriumData = equilibrium(table, self.K)
        self.max_attempts = max_attempts
        self._K_arr = np.array(self.K, dtype=np.int64)

    @property
    def capacity(self) -> float:
        return self.equilibrium.capacity

    @cached_property
    def _entrance_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.equilibrium.entrance_distribution)
        cdf[-1] = 1.0
        return cdf

    def trajectory(self, rng: np.random.Generator) -> Trajectory:
        x0 = self.K[int(self._entrance_cdf.searchsorted(rng.random(), side="right"))]
        forward = forward_walk(self.spec, x0, rng)
        backward = _conditioned(self.spec, self._K_arr, x0, rng, self.max_attempts)
        return Trajectory(x0, forward, backward)

    def sample(self, alpha: float, seq) -> Soup:
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        seq = as_seed_sequence(seq)
        count = int(child_stream(seq, 0).poisson(alpha * self.capacity))
        trajectories = tuple(self.trajectory(child_stream(seq, i + 1)) for i in range(count))
        provenance = {"entropy": seq.entropy, "spawn_key": list(seq.spawn_key)}
        return Soup(float(alpha), self.K, trajectories, provenance)

    def local_times(self, alpha: float, seq, sites: Sequence | None = None) -> np.ndarray:
        sites = self.K if sites is None else [as_site(s, self.spec.dimension) for s in sites]
        return local_time_field(self.sample(alpha, seq), sites).as_array()


def sample_soup(spec: WalkSpec, K: Sequence, alpha: float, seq,
                table: GreenTable | None = None,
                max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Soup:
    return SoupSampler(spec, K, table, max_attempts).sample(alpha, seq)


def local_time_field(soup: Soup, sites: Sequence) -> LocalTimeField:
    """Total occupation time L_1(x) of the soup at each requested site."""
    sites = tuple(tuple(s) for s in sites)
    totals = dict.fromkeys(sites, 0.0)
    for traj in soup.trajectories:
        for segment in (traj.forward, traj.backward):
            for s, h in zip(segment.sites, segment.holding):
                if s in totals:
                    totals[s] += h
    return LocalTimeField(sites, tuple(totals[s] for s in sites))


def soup_local_time_samples(sampler: SoupSampler, alpha: float, seed, n_soups: int,
                            sites: Sequence | None = None) -> np.ndarray:
    """(n_soups, |sites|) local times; soup j uses the child key (j,) of ``seed``."""
    seq = as_seed_sequence(seed)
    return np.array([sampler.local_times(alpha, child_seq(seq, j), sites)
                     for j in range(n_soups)])


def exp_moment_target(alpha: float, delta: float, u0: float) -> float:
    """E exp(delta L_1(x)) = exp(alpha delta / (1 - delta u0)) for x in K."""
    if delta * u0 >= 1.0:
        raise DivergenceError(f"delta*u(0) = {delta * u0:.6g} >= 1: exponential moment is infinite")
    return math.exp(alpha * delta / (1.0 - delta * u0))


def exp_moment_check(spec: WalkSpec, K: Sequence, x, alpha: float, delta: float,
                     samples: int, seed=0, sampler: SoupSampler | None = None) -> IdentityReport:
    """Empirical mean of exp(delta L_1(x)) against the master-formula value."""
    sampler = sampler or SoupSampler(spec, K)
    x = as_site(x, spec.dimension)
    if x not in sampler.K:
        raise ValueError("x must lie in K")
    target = exp_moment_target(alpha, delta, sampler.table.u0)
    lt = soup_local_time_samples(sampler, alpha, seed, samples, [x])[:, 0]
    params = {"d": spec.dimension, "kappa": spec.kappa, "K": [list(s) for s in sampler.K],
              "x": list(x), "alpha": alpha, "delta": delta, "samples": samples,
              "seed": str(seed)}
    return mc_report("exp_moment", np.exp(delta * lt), target, params)


def backward_acceptance(spec: WalkSpec, K: Sequence, x0, attempts: int, seed=0):
    """Counts (accepted, killed_at_first_event) over independent rejection attempts."""
    K_arr = np.array([as_site(s, spec.dimension) for s in K], dtype=np.int64)
    rng = child_stream(as_seed_sequence(seed), 0)
    accepted = killed = 0
    for _ in range(attempts):
        segment, k = backward_attempt(spec, K_arr, x0, rng)
        accepted += segment is not None
        killed += k
    return accepted, killed
