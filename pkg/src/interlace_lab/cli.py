"""Command-line front end: ``interlace-lab <command> [flags]``.

Every command prints one JSON report ``{command, config, results, pass, versions}``
to stdout and, when an output directory is known (``--out-dir`` or the
INTERLACE_LAB_OUT environment variable), also writes it there as ``<command>.json``
next to any CSV the command produces.  A ``--config`` file of ``key=value`` lines
supplies defaults that explicit flags override.

Exit status: 0 when every result passes, 1 on an identity or tolerance failure
(numerical errors are embedded verbatim in the report), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import platform
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__, acceptance, continuum, wick_algebra as wa
from . import field as gfield
from .errors import LabError, MismatchError
from .lattice import WalkSpec, equilibrium, green_table
from .moments import (MomentOracle, decomposition_check, iso_monte_carlo, iso_verify,
                      profiles, rilt_moment_crosscheck)
from .reports import IdentityReport, jsonable, mc_report
from .sim import (SoupSampler, as_seed_sequence, backward_acceptance, child_seq, child_stream,
                  exp_moment_check, local_time_field)

OUT_ENV = "INTERLACE_LAB_OUT"
IDENTITIES = ("iso", "iso-plain", "rho", "multinomial", "pairings", "rilt", "wick", "shifted",
              "coeff", "decomposition", "rilt-moments", "expmoment", "backward")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _site(token: str) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in token.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"site {token!r} is not a comma-separated integer tuple")


def _nonneg(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _walk_flags(p: argparse.ArgumentParser, K: bool = True) -> None:
    p.add_argument("--d", type=int, default=1, help="lattice dimension")
    p.add_argument("--kappa", type=float, default=1.0, help="killing rate")
    if K:
        p.add_argument("--K", type=_site, nargs="+", default=[(0,)],
                       help="sites, each written as comma-separated coordinates")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="interlace-lab", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file of defaults")
    common.add_argument("--out-dir", help=f"report directory (default ${OUT_ENV})")
    common.add_argument("--csv", help="CSV output path for commands that produce tables")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("green", parents=[common], help="tabulate u(x)")
    _walk_flags(p, K=False)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--rtol", type=float, default=1e-10)

    p = sub.add_parser("equilibrium", parents=[common], help="equilibrium measure and capacity of K")
    _walk_flags(p)

    p = sub.add_parser("soup", parents=[common], help="sample soups and check E L1 = alpha")
    _walk_flags(p)
    p.add_argument("--alpha", type=_nonneg, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--soup-json", help="write the first sampled soup as JSON here")

    p = sub.add_parser("gff", parents=[common], help="sample the Gaussian field on a window")
    _walk_flags(p, K=False)
    p.add_argument("--window", type=_site, nargs="+", default=[(0,), (1,)])
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=1000)

    p = sub.add_parser("verify", parents=[common], help="check one identity")
    _walk_flags(p)
    p.add_argument("--identity", choices=IDENTITIES, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--nmax", type=int, default=4)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=_nonneg, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=0,
                   help="Monte Carlo samples (0 = exact checks only where possible)")
    p.add_argument("--delta", type=float, help="exponential-moment parameter (default 0.5/u0)")
    p.add_argument("--c", type=float, nargs="+", default=[1.0, -1.0, 2.0, -2.0])
    p.add_argument("--rmax", type=int, default=5)
    p.add_argument("--emax", type=int, default=6)

    p = sub.add_parser("moments", parents=[common], help="exact soup and field moments")
    _walk_flags(p, K=False)
    p.add_argument("--points", type=_site, nargs="*", default=[], help="local-time points")
    p.add_argument("--gaussian", type=_site, nargs="*", default=[], help="field points")
    p.add_argument("--alpha", type=_nonneg, default=1.0)

    p = sub.add_parser("asymptotics", parents=[common], help="chain/cycle growth in the continuum")
    p.add_argument("--exponent", choices=("brownian", "log"), default="brownian")
    p.add_argument("--log-power", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--eps-grid", type=float, nargs="+", default=list(continuum.DEFAULT_EPS_GRID))
    p.add_argument("--max-spread", type=float, default=10.0)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers")
    p.add_argument("--samples", type=int, default=acceptance.DEFAULT_SAMPLES)
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _config_path(argv: Sequence[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a path")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    path = _config_path(argv)
    if path is None or not argv or argv[0] not in COMMANDS:
        return parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[argv[0]]
    known = {a.dest: a for a in sub._actions if a.option_strings}
    tokens: list[str] = []
    for key, value in read_config(path).items():
        if key not in known or key in ("help", "config"):
            raise UsageError(f"config key {key!r} is not a flag of {argv[0]}")
        tokens += [known[key].option_strings[-1]] + value.split()
    # config tokens first so explicit flags, parsed later, win
    return parser.parse_args([argv[0]] + tokens + list(argv[1:]))


def _config_dict(args: argparse.Namespace) -> dict:
    return jsonable({k: v for k, v in sorted(vars(args).items())
                     if k not in ("config", "out_dir")})


def versions() -> dict:
    return {"interlace_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _spec(args) -> WalkSpec:
    return WalkSpec.nearest_neighbor(args.d, args.kappa)


def _sites(args, name: str = "K") -> list[tuple[int, ...]]:
    sites = list(dict.fromkeys(getattr(args, name)))
    for s in sites:
        if len(s) != args.d:
            raise UsageError(f"--{name}: site {s} does not have dimension {args.d}")
    return sites


def _radius(sites) -> int:
    return max([1] + [max(abs(a - b) for a, b in zip(x, y)) for x in sites for y in sites])


def _need_seed(args, why: str) -> None:
    if args.seed is None:
        raise UsageError(f"--seed is required for {why}")


def _write(args, name: str, text: str) -> str | None:
    target = None
    if getattr(args, "csv", None) and name.endswith(".csv"):
        target = Path(args.csv)
    elif _out_dir(args):
        target = _out_dir(args) / name
    if target is None:
        return None
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
    return str(target)


def _out_dir(args) -> Path | None:
    d = args.out_dir or os.environ.get(OUT_ENV)
    return Path(d) if d else None


# commands; each returns a list of result dicts carrying a "pass" key

def cmd_green(args) -> list[dict]:
    table = green_table(_spec(args), args.radius, args.rtol)
    residual = table.resolvent_residual()
    path = _write(args, "green.csv", table.to_csv())
    return [{"identity": "resolvent equation", "u0": table.u0, "grid_size": table.grid_size,
             "residual": residual, "csv": path, "pass": residual < 1e-8,
             "table": json.loads(table.to_json())["entries"]}]


def cmd_equilibrium(args) -> list[dict]:
    K = _sites(args)
    eq = equilibrium(green_table(_spec(args), _radius(K)), K)
    return [{"identity": "sum_y u(x-y) e_K(y) = 1 on K", **eq.to_dict(), "pass": True}]


def cmd_soup(args) -> list[dict]:
    _need_seed(args, "soup sampling")
    K = _sites(args)
    sampler = SoupSampler(_spec(args), K)
    seq = as_seed_sequence(args.seed)
    lt = np.empty((args.samples, len(sampler.K)))
    counts = np.empty(args.samples)
    first = None
    for j in range(args.samples):
        soup = sampler.sample(args.alpha, child_seq(seq, j))
        first = first or soup
        counts[j] = soup.count
        lt[j] = local_time_field(soup, sampler.K).values
    if first is not None:
        _write(args, "local_times.csv", local_time_field(first, sampler.K).to_csv())
        if args.soup_json:
            Path(args.soup_json).write_text(first.to_json())
    out = [mc_report("E L1(x) = alpha", lt[:, i], args.alpha, {"x": list(x)}).to_dict()
           for i, x in enumerate(sampler.K)]
    out.append(mc_report("E N = alpha cap(K)", counts, args.alpha * sampler.capacity,
                         {"capacity": sampler.capacity}).to_dict())
    return out


def cmd_gff(args) -> list[dict]:
    _need_seed(args, "field sampling")
    window = _sites(args, "window")
    table = green_table(_spec(args), _radius(window))
    factor = gfield.covariance_factor(table, window)
    rng = child_stream(as_seed_sequence(args.seed), 0)
    draws = factor.sample(rng, args.samples)
    _write(args, "field.csv",
           gfield.FieldSample(factor.sites, tuple(draws[0].tolist())).to_csv())
    out = [{"identity": "Cholesky residual", "jitter": factor.jitter,
            "residual": factor.residual(), "pass": factor.residual() < 1e-10 * table.u0}]
    for i, j in itertools.combinations_with_replacement(range(len(window)), 2):
        out.append(mc_report("E g(x) g(y) = u(x-y)", draws[:, i] * draws[:, j],
                             factor.covariance[i, j],
                             {"x": list(window[i]), "y": list(window[j])}).to_dict())
    return out


def _exact_report(identity: str, params: dict, lhs, rhs, ok: bool) -> dict:
    return IdentityReport(identity, params, lhs, rhs, passed=ok).to_dict()


def cmd_verify(args) -> list[dict]:
    ident = args.identity
    if ident in ("iso", "iso-plain"):
        K = _sites(args)
        spec = _spec(args)
        table = green_table(spec, _radius(K))
        oracle = MomentOracle(table)
        # for n = 1 the plain form (1/2 g^2 + l against (g/sqrt2 + alpha)^2) is reported too
        forms = ["plain"] if ident == "iso-plain" else ["wick"] + (["plain"] if args.n == 1 else [])
        out = []
        for form in forms:
            for r in iso_verify(oracle, args.n, K, args.alpha, args.order, form=form):
                r.parameters["form"] = form
                out.append(r.to_dict())
        if args.samples:
            _need_seed(args, "Monte Carlo verification")
            sampler = SoupSampler(spec, K, table)
            out += [r.to_dict() for r in iso_monte_carlo(oracle, sampler, args.n, args.alpha,
                                                         args.order, args.samples, args.seed)]
        return out
    if ident == "rho":
        cases = wa.rho_exhaustive(args.nmax)
        return [_exact_report("rho closed form", {"nmax": args.nmax}, cases, cases, True)]
    if ident == "multinomial":
        bad = [(k, m, p) for k, m, p in itertools.product(range(args.nmax + 1), repeat=3)
               if len(set(wa.multinomial_identity(k, m, p))) != 1]
        return [_exact_report("multinomial identity", {"nmax": args.nmax}, bad, [], not bad)]
    if ident == "pairings":
        cases = wa.all_pairing_checks(args.rmax, args.emax)
        return [_exact_report("pairing census", {"rmax": args.rmax, "emax": args.emax},
                              cases, cases, True)]
    if ident == "rilt":
        wa.gf_matches_recursion(args.nmax)
        polys = wa.rilt_polys_recursive(args.nmax)
        return [_exact_report("generating function = recursion", {"nmax": args.nmax},
                              [p.to_canonical() for p in polys], None, True)]
    if ident in ("wick", "shifted"):
        u0 = green_table(_spec(args), 1).u0
        grid = np.linspace(-3, 3, 25) * np.sqrt(u0)
        if ident == "wick":
            return [gfield.hermite_check(args.nmax, u0, grid).to_dict()]
        return [gfield.shifted_wick_check(args.nmax, u0, c, grid).to_dict() for c in args.c]
    if ident == "coeff":
        wa.wtilde_H(min(args.nmax, 5))
        wa.check_B_expansion(args.nmax)
        return [_exact_report("A and B coefficient expansions", {"nmax": args.nmax},
                              None, None, True)]
    if ident == "decomposition":
        _need_seed(args, "soup sampling")
        K = _sites(args)
        sampler = SoupSampler(_spec(args), K)
        seq = as_seed_sequence(args.seed)
        n_soups = args.samples or 100
        return [decomposition_check(sampler.sample(args.alpha, child_seq(seq, j)), args.nmax,
                                    K[0], sampler.table.u0).to_dict() for j in range(n_soups)]
    if ident == "rilt-moments":
        K = _sites(args)
        oracle = MomentOracle(green_table(_spec(args), _radius(K) + 1))
        return [rilt_moment_crosscheck(oracle, prof, [K[i % len(K)] for i in range(len(prof))],
                                       args.alpha).to_dict() for prof in profiles(args.nmax)]
    if ident == "expmoment":
        _need_seed(args, "Monte Carlo verification")
        K = _sites(args)
        spec = _spec(args)
        sampler = SoupSampler(spec, K)
        delta = args.delta if args.delta is not None else 0.5 / sampler.table.u0
        return [exp_moment_check(spec, K, K[0], args.alpha, delta, args.samples or 10_000,
                                 args.seed, sampler).to_dict()]
    # backward
    _need_seed(args, "Monte Carlo verification")
    K = _sites(args)
    spec = _spec(args)
    attempts = args.samples or 10_000
    eq = equilibrium(green_table(spec, _radius(K)), K)
    acc, killed = backward_acceptance(spec, K, K[0], attempts, args.seed)
    p = eq.weight(K[0]) / (1 + spec.kappa)
    q = spec.kappa / (1 + spec.kappa)
    return [mc_report("backward acceptance = e_K(x)/(1+kappa)",
                      np.repeat([1.0, 0.0], [acc, attempts - acc]), p, {"x": list(K[0])}).to_dict(),
            mc_report("killed at first event = kappa/(1+kappa)",
                      np.repeat([1.0, 0.0], [killed, attempts - killed]), q).to_dict()]


def cmd_moments(args) -> list[dict]:
    pts = [p for p in args.points]
    gpts = [p for p in args.gaussian]
    for s in pts + gpts:
        if len(s) != args.d:
            raise UsageError(f"site {s} does not have dimension {args.d}")
    oracle = MomentOracle(green_table(_spec(args), _radius(pts + gpts)))
    coeffs = oracle.soup_moment_by_blocks(pts)
    return [{"identity": "exact moments", "points": pts, "gaussian_points": gpts,
             "soup_moment": oracle.soup_moment(pts, args.alpha),
             "alpha_polynomial": {f"alpha^{j}": c for j, c in enumerate(coeffs) if c},
             "gaussian_moment": oracle.gaussian_moment(gpts), "pass": True}]


def cmd_asymptotics(args) -> list[dict]:
    spec = continuum.ContinuumSpec(kappa=args.kappa, exponent=args.exponent,
                                   log_power=args.log_power)
    report = continuum.asymptotics(spec, args.kmax, tuple(args.eps_grid))
    path = _write(args, "asymptotics.csv", report.to_csv())
    out = []
    for k in range(1, args.kmax + 1):
        out.append({"identity": f"ch{k}(eps) / h(1/eps)^{k} bounded", "ratios": report.ratios(k),
                    "spread": report.spread(k), "csv": path,
                    "pass": report.spread(k) < args.max_spread})
    if args.exponent == "brownian":
        errs = [abs(continuum.h(spec, 1 / e) / continuum.h_brownian_closed(args.kappa, 1 / e) - 1)
                for e in args.eps_grid]
        out.append({"identity": "h closed form", "max_rel_err": max(errs), "pass": max(errs) < 1e-8})
    return out


def cmd_selftest(args) -> list[dict]:
    results = acceptance.run_all(set(args.only) if args.only else None, args.samples)
    for r in results:
        print(r.line(), file=sys.stderr)
    return [r.to_dict() for r in results]


COMMANDS = {"green": cmd_green, "equilibrium": cmd_equilibrium, "soup": cmd_soup,
            "gff": cmd_gff, "verify": cmd_verify, "moments": cmd_moments,
            "asymptotics": cmd_asymptotics, "selftest": cmd_selftest}


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except (UsageError, OSError) as exc:
        print(f"interlace-lab: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        results = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"interlace-lab: usage error: {exc}", file=sys.stderr)
        return 2
    except (LabError, ValueError) as exc:
        entry = {"error": type(exc).__name__, "message": str(exc), "pass": False}
        if isinstance(exc, MismatchError) and exc.detail is not None:
            entry["detail"] = exc.detail
        results = [entry]
    ok = bool(results) and all(r.get("pass") for r in results)
    report = jsonable({"command": args.command, "config": _config_dict(args),
                       "results": results, "pass": ok, "versions": versions()})
    text = json.dumps(report, indent=1, sort_keys=True, default=str)
    print(text)
    if _out_dir(args):
        _out_dir(args).mkdir(parents=True, exist_ok=True)
        (_out_dir(args) / f"{args.command}.json").write_text(text + "\n")
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
