"""
Command-line front end.

Every command writes one JSON report (or flat ``key,value`` CSV rows with
``--csv``) to standard output; diagnostics go to standard error. Link and
message rates on the command line are read in the display unit (bits unless
``--units nats``); ``--epsilon`` and ``--tau`` are always nats.

Exit status: 0 on success, 1 on invalid input, 2 when a simulation would
exceed its memory cap.
"""
import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time

from . import __version__
from .channel import build_paper_example, load_channel
from .coding import SimConfig, simulate
from .errors import InvalidArgument, ResourceLimitError
from .optimize import OptimizerConfig, baselines, maximize_rate
from .region import (X, RateTriple, check_triple, corner_points, cut_set_bound, dual_bounds,
                     evaluate_bounds, joint_from_factors, load_distribution)
from .prob import entropy

log = logging.getLogger("diamondnet")

SEED_ENV = "DIAMONDNET_SEED"
LN2 = math.log(2.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


class _Units:
    def __init__(self, name):
        self.name = name
        self.scale = LN2 if name == "bits" else 1.0

    def to_nats(self, v):
        return None if v is None else float(v) * self.scale

    def rate(self, nats):
        return {"value": nats / self.scale, "unit": self.name}


def _count(v):
    return {"value": int(v), "unit": "count"}


def _nonneg(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not a number") from None
    if not v >= 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"{s!r} must be a finite nonnegative number")
    return v


def _posint(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{s!r} must be positive")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--units", choices=("bits", "nats"), default="bits",
                        help="unit for rate inputs and reported informations (default bits)")
    common.add_argument("--csv", action="store_true", help="emit flat key,value rows")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="diamondnet", description=__doc__.strip().splitlines()[0],
                parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("region", parents=[common],
                       help="evaluate the region bounds of a distribution")
    s.add_argument("--dist", required=True)
    s.add_argument("--r", type=_nonneg)
    s.add_argument("--r1", type=_nonneg)
    s.add_argument("--r2", type=_nonneg)

    def optimizer_flags(s):
        s.add_argument("--restarts", type=_posint, default=64)
        s.add_argument("--max-iterations", type=_posint, default=2000)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--card-u", type=_posint)
        s.add_argument("--card-z", type=_posint)
        s.add_argument("--unsafe", action="store_true",
                       help="allow cardinalities above the sufficiency bounds")
        s.add_argument("--jobs", type=_posint, default=1)

    s = sub.add_parser("capacity", parents=[common],
                       help="capacity lower bound by optimisation, with the cut-set bound")
    s.add_argument("--channel", required=True)
    s.add_argument("--r1", type=_nonneg, required=True)
    s.add_argument("--r2", type=_nonneg, required=True)
    optimizer_flags(s)

    s = sub.add_parser("cutset", parents=[common], help="cut-set upper bound")
    s.add_argument("--channel", required=True)
    s.add_argument("--r1", type=_nonneg, required=True)
    s.add_argument("--r2", type=_nonneg, required=True)

    s = sub.add_parser("duality", parents=[common],
                       help="dual source-coding rate constraints and their identities")
    s.add_argument("--dist", required=True)

    s = sub.add_parser("example", parents=[common],
                       help="binary modulo-2 example with half-bit links")
    optimizer_flags(s)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo run of the coding scheme")
    s.add_argument("--dist", required=True)
    s.add_argument("--n", type=_posint, required=True)
    s.add_argument("--trials", type=_posint, required=True)
    s.add_argument("--epsilon", type=float, required=True, help="rate back-off (nats)")
    s.add_argument("--tau", type=float, required=True, help="compression rate margin (nats)")
    s.add_argument("--delta", type=float, help="typicality slack (default 0.5/sqrt(n))")
    s.add_argument("--rate", type=_nonneg, help="message rate; sets M_b (default M_b = 1)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--memory-cap", type=_posint, default=10**7)
    s.add_argument("--timing", action="store_true", help="include wall time in the report")
    return p


def _region(args, units):
    dist = load_distribution(args.dist)
    e = evaluate_bounds(dist)
    res = {k: units.rate(v) for k, v in e.as_dict().items()}
    r = units.to_nats(args.r)
    if r is not None:
        a, b = corner_points(e, r)
        res["corner_a_prime"] = {"r1": units.rate(a[0]), "r2": units.rate(a[1])}
        res["corner_b_prime"] = {"r1": units.rate(b[0]), "r2": units.rate(b[1])}
        if args.r1 is not None and args.r2 is not None:
            t = RateTriple(r, units.to_nats(args.r1), units.to_nats(args.r2))
            res["achievable"] = check_triple(t, e)
    elif args.r1 is not None or args.r2 is not None:
        raise UsageError("--r1/--r2 need --r")
    inputs = {"dist": args.dist, "r": args.r, "r1": args.r1, "r2": args.r2}
    return inputs, res, None


def _optimizer_cfg(args, seed):
    return OptimizerConfig(restarts=args.restarts, max_iterations=args.max_iterations,
                           seed=seed, card_u=args.card_u, card_z=args.card_z,
                           unsafe=args.unsafe, n_jobs=args.jobs)


def _capacity_results(channel, r1, r2, cfg, units):
    t0 = time.perf_counter()
    out = maximize_rate(channel, r1, r2, cfg)
    log.info("optimisation took %.1f s", time.perf_counter() - t0)
    cut = cut_set_bound(channel, r1, r2)
    routing, daf = baselines(channel, r1, r2)
    cu, cz = cfg.resolved_cards(channel)
    rates = sorted(out.per_restart_rates, reverse=True)
    return {
        "best_rate": units.rate(out.best_rate),
        "cut_set_bound": units.rate(cut),
        "gap_to_cut_set": units.rate(cut - out.best_rate),
        "routing_baseline": units.rate(routing),
        "daf_baseline": units.rate(daf),
        "feasible": out.feasible,
        "restarts": _count(len(out.per_restart_rates)),
        "top_restart_rates": [units.rate(v) for v in rates[:5]],
        "iterations_used": _count(out.iterations_used),
        "card_u": _count(cu),
        "card_z": _count(cz),
        "best_distribution": {"value": out.best_dist.to_dict(), "unit": "probability"},
    }


def _capacity(args, units):
    seed = _default_seed() if args.seed is None else args.seed
    channel = load_channel(args.channel)
    r1, r2 = units.to_nats(args.r1), units.to_nats(args.r2)
    res = _capacity_results(channel, r1, r2, _optimizer_cfg(args, seed), units)
    inputs = {"channel": args.channel, "r1": args.r1, "r2": args.r2,
              "restarts": args.restarts, "max_iterations": args.max_iterations,
              "card_u": args.card_u, "card_z": args.card_z}
    return inputs, res, seed


def _cutset(args, units):
    channel = load_channel(args.channel)
    cut = cut_set_bound(channel, units.to_nats(args.r1), units.to_nats(args.r2))
    inputs = {"channel": args.channel, "r1": args.r1, "r2": args.r2}
    return inputs, {"cut_set_bound": units.rate(cut)}, None


def _duality(args, units):
    dist = load_distribution(args.dist)
    e = evaluate_bounds(dist)
    r0, r1, r2, total = dual_bounds(dist)
    hx = entropy(joint_from_factors(dist), [X])
    res = {
        "r0_min": units.rate(r0), "r1_min": units.rate(r1), "r2_min": units.rate(r2),
        "sum_min": units.rate(total), "h_x": units.rate(hx),
        "b1": units.rate(e.b1), "b4": units.rate(e.b4),
        "residual_r0": units.rate(r0 - (hx - e.b1)),
        "residual_sum": units.rate(total - (hx + e.b4)),
    }
    return {"dist": args.dist}, res, None


def _example(args, units):
    seed = _default_seed() if args.seed is None else args.seed
    channel = build_paper_example()
    half = 0.5 * LN2
    res = _capacity_results(channel, half, half, _optimizer_cfg(args, seed), units)
    res["crossover"] = {"value": float(channel.matrix[0, 1]), "unit": "probability"}
    inputs = {"channel": channel.to_dict(), "r1": units.rate(half), "r2": units.rate(half),
              "restarts": args.restarts, "card_u": args.card_u, "card_z": args.card_z}
    return inputs, res, seed


def _simulate(args, units):
    seed = _default_seed() if args.seed is None else args.seed
    dist = load_distribution(args.dist)
    cfg = SimConfig(dist, args.n, args.epsilon, args.tau, args.trials, seed=seed,
                    delta=args.delta, rate=units.to_nats(args.rate),
                    memory_cap=args.memory_cap)
    rep = simulate(cfg)
    o = rep["outcome"]
    res = {
        "codebook": {k: _count(v) for k, v in rep["codebook"].items()},
        "informations": {k: units.rate(v) for k, v in rep["informations"].items()},
        "errors_total": _count(o["errors_total"]),
        "errors_e1": _count(o["errors_e1"]),
        "errors_e2": _count(o["errors_e2"]),
        "errors_e3": _count(o["errors_e3"]),
        "trials": _count(o["trials"]),
        "empirical_pe": {"value": o["empirical_pe"], "unit": "probability"},
    }
    log.info("simulation took %.2f s", rep["wall_time_s"])
    if args.timing:
        res["wall_time"] = {"value": rep["wall_time_s"], "unit": "s"}
    inputs = dict(rep["config"], dist=args.dist, epsilon_unit="nats", tau_unit="nats")
    if args.rate is not None:
        inputs["rate"] = args.rate
    return inputs, res, seed


COMMANDS = {"region": _region, "capacity": _capacity, "cutset": _cutset,
            "duality": _duality, "example": _example, "simulate": _simulate}


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}.{i}")
    else:
        yield prefix, obj


def render(report, as_csv=False):
    if not as_csv:
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(report):
        w.writerow([k, "" if v is None else v])
    return buf.getvalue()


def run_command(argv, stdout=None, stderr=None):
    """Run one CLI invocation; returns (exit_code, report or None)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 1, None
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0), None
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    units = _Units(args.units)
    try:
        inputs, results, seed = COMMANDS[args.command](args, units)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=stderr)
        return 2, None
    except (UsageError, InvalidArgument, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid input: {exc}", file=stderr)
        return 1, None
    report = {"command": args.command, "version": __version__, "units": units.name,
              "inputs": inputs, "results": results}
    if seed is not None:
        report["seed"] = seed
    stdout.write(render(report, args.csv))
    return 0, report


def main(argv=None):
    code, _ = run_command(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
