"""Command-line entry point.

Exit status is 0 on success, 1 for configuration or input errors and 2 when a
numerical procedure fails; a one-line diagnostic goes to stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import study
from .errors import NumericalError
from .ladder import DEFAULT_TOL, ascending_ladder, conditioned_ladder, descending_stats, \
    prob_tau_plus_infinite
from .lattice import DriftWalkSpec, load_pmf, moments, validate
from .max_pmf import (METHODS, asymptotic_local, asymptotic_tail, asymptotic_tail_summed,
                      compute_max_pmf)
from .renewal import brute_force_sum, renewal_sequence


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="walkmax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def add(name, help, dist=True, config=False):
        p = sub.add_parser(name, help=help)
        if dist:
            p.add_argument("--dist", required=True, help="distribution JSON file")
        if config:
            p.add_argument("--config", required=True, help="sweep configuration JSON file")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--out", help="write CSV here instead of stdout")
        return p

    add("validate", "check a lattice increment distribution")
    add("ladder", "ladder height law and ladder epoch statistics")
    p = add("maxdist", "distribution of the all-time maximum")
    p.add_argument("--ymax", type=int, required=True)
    p.add_argument("--method", choices=METHODS, default="geometric_sum")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=100_000, help="Monte Carlo sample size")
    p = add("asymptotic", "heavy-traffic approximations for the walk's drift and variance")
    p.add_argument("--ymax", type=int, required=True)
    p = add("renewal", "weighted renewal sequence of a step law on positive offsets")
    p.add_argument("--ymax", type=int, required=True)
    p.add_argument("--weight", type=float, default=1.0, help="geometric weight A in (0, 1]")
    add("sweep", "heavy-traffic sweep along a tilt family", dist=False, config=True)
    add("remainder", "remainder of the renewal leading term", dist=False, config=True)
    return parser


def _walk(path) -> DriftWalkSpec:
    return DriftWalkSpec.from_pmf(validate(load_pmf(path)))


def _cmd_validate(args, out):
    pmf = validate(load_pmf(args.dist))
    mean, var, _ = moments(pmf)
    rows = [("span", pmf.span), ("support_min", pmf.kmin), ("support_max", pmf.kmax),
            ("mean", mean), ("variance", var), ("drift_a", -mean), ("status", "ok")]
    study.write_csv(("field", "value"), rows, out)


def _cmd_ladder(args, out):
    walk = _walk(args.dist)
    asc = ascending_ladder(walk, args.tol)
    z = conditioned_ladder(asc)
    desc = descending_stats(walk, args.tol)
    rows = [("drift_a", walk.drift_a), ("sigma2", walk.sigma2), ("total_A", asc.total_A),
            ("trunc_error", asc.trunc_error), ("mu", z.mu),
            ("mean_S_tau_minus", desc.mean_S_tau_minus),
            ("mean_tau_minus", desc.mean_tau_minus)]
    if walk.drift_a > 0:
        rows.append(("p_tau_plus_infinite", prob_tau_plus_infinite(walk, args.tol)))
    rows += [(f"height_{k}", m) for k, m in sorted(asc.heights.items())]
    study.write_csv(("field", "value"), rows, out)


def _cmd_maxdist(args, out):
    walk = _walk(args.dist)
    res = compute_max_pmf(walk, args.ymax, args.method, tol=args.tol, seed=args.seed,
                          n_paths=args.paths)
    err = np.broadcast_to(np.asarray(res.err_bound, dtype=float), res.pi.shape)
    study.write_csv(("y", "p", "err_bound"),
                    ((y, float(p), float(e)) for y, (p, e) in enumerate(zip(res.pi, err))), out)


def _cmd_asymptotic(args, out):
    walk = _walk(args.dist)
    a, s2, d = walk.drift_a, walk.sigma2, walk.span
    rows = ((y, asymptotic_local(a, s2, d, y), asymptotic_tail(a, s2, d, y),
             asymptotic_tail_summed(a, s2, d, y)) for y in range(args.ymax + 1))
    study.write_csv(("y", "local", "tail", "summed_local"), rows, out)


def _cmd_renewal(args, out):
    z = load_pmf(args.dist)
    u = renewal_sequence(z, args.weight, args.ymax).u
    rows = ((n, float(u[n]), (1.0 if n == 0 else 0.0) + brute_force_sum(z, args.weight, n, n))
            for n in range(args.ymax + 1))
    study.write_csv(("n", "u", "brute_force"), rows, out)


def _cmd_sweep(args, out):
    cfg = study.SweepConfig.load(args.config)
    out.write(study.sweep_csv(study.run_sweep(cfg)))


def _cmd_remainder(args, out):
    cfg = study.SweepConfig.load(args.config)
    out.write(study.remainder_csv(study.run_remainder_scan(cfg)))


COMMANDS = {
    "validate": _cmd_validate,
    "ladder": _cmd_ladder,
    "maxdist": _cmd_maxdist,
    "asymptotic": _cmd_asymptotic,
    "renewal": _cmd_renewal,
    "sweep": _cmd_sweep,
    "remainder": _cmd_remainder,
}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        buf = io.StringIO()
        COMMANDS[args.command](args, buf)
    except NumericalError as exc:
        print(f"walkmax: numerical failure: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"walkmax: {exc}", file=sys.stderr, end="")
        return 1
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"walkmax: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
