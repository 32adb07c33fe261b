"""Report records shared by the checks and the CLI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

Z_THRESHOLD = 4.0


def jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays, tuples and Fractions for json."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


@dataclass
class IdentityReport:
    """One checked identity: exact routes and/or a Monte Carlo estimate."""

    identity: str
    parameters: dict = field(default_factory=dict)
    exact_lhs: Any = None
    exact_rhs: Any = None
    mc_mean: float | None = None
    mc_se: float | None = None
    z: float | None = None
    passed: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return jsonable(d)


def mean_and_se(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples for a standard error")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def z_score(mean: float, se: float, target: float) -> float:
    if se == 0.0:
        return 0.0 if mean == target else math.copysign(math.inf, mean - target)
    return (mean - target) / se


def mc_report(identity: str, samples, target: float, parameters: dict | None = None,
              threshold: float = Z_THRESHOLD) -> IdentityReport:
    mean, se = mean_and_se(samples)
    z = z_score(mean, se, target)
    return IdentityReport(identity, parameters or {}, exact_lhs=target, mc_mean=mean,
                          mc_se=se, z=z, passed=abs(z) < threshold)


def relative_close(a: float, b: float, rtol: float, floor: float = 1e-300) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), floor)
