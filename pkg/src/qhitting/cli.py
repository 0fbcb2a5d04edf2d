"""Command line front end.

Exit codes: 0 success, 1 input error, 2 infinite hitting time (precondition
violated or non-convergent series), 3 statistical failure (all trajectories
censored).
"""
import argparse
import json
import math
import sys
import time

from . import io as qio
from . import walks
from .channels import Geometric
from .errors import (
    AllCensored,
    DimensionError,
    NonConvergent,
    PreconditionViolated,
    TrajectoryAborted,
    ValidationError,
)
from .hitting import generalized_hitting_time
from .sweep import COLUMNS, sweep
from .trajectories import DEFAULT_MAX_STEPS, ProtocolConfig, estimate_hitting

EXIT_OK, EXIT_INPUT, EXIT_INFINITE, EXIT_STATS = 0, 1, 2, 3

SOLVERS = {"dense": "dense", "neumann": "neumann", "interleaved": "interleaved"}


def build_chain(args):
    """Return (channel, target, rho0, provenance dict) for the selected chain."""
    kind = args.chain
    if kind == "grover-restricted":
        _need(args, "N")
        return (*walks.grover_restricted(args.N), {"chain": kind, "N": args.N})
    if kind == "grover-full":
        _need(args, "qubits")
        return (*walks.grover_full(args.qubits, args.marked),
                {"chain": kind, "qubits": args.qubits, "marked": args.marked})
    if kind == "cycle":
        _need(args, "L")
        return (*walks.coined_cycle(args.L), {"chain": kind, "L": args.L})
    if kind == "classical":
        _need(args, "P", "start", "target")
        try:
            target = int(args.target)
        except ValueError:
            raise qio.InputError(f"--target must be a state index for classical chains, got {args.target!r}")
        p = qio.load_stochastic(args.P)
        try:
            chain = walks.classical_embed(p, args.start, target)
        except ValidationError as exc:
            raise qio.InputError(f"{args.P}: {exc}") from exc
        return (*chain, {"chain": kind, "P": args.P, "start": args.start, "target": target})
    if kind == "channel":
        _need(args, "channel", "rho", "target")
        e = qio.load_channel(args.channel)
        rho = qio.load_state(args.rho)
        target = qio.load_target(args.target)
        if not e.dim == rho.dim == target.dim:
            raise qio.InputError(
                f"dimension mismatch: channel {e.dim}, state {rho.dim}, target {target.dim}"
            )
        return e, target, rho, {"chain": kind, "channel": args.channel, "rho": args.rho, "target": args.target}
    raise qio.InputError(f"unknown chain {kind!r}")


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join(f"--{m}" for m in missing)
        raise qio.InputError(f"chain {args.chain!r} requires {flags}")


def _sigma(args):
    if args.sigma is not None:
        return qio.load_sigma(args.sigma)
    try:
        return Geometric(args.p)
    except ValidationError as exc:
        raise qio.InputError(f"--p: {exc}") from exc


def _sigma_desc(sigma):
    return sigma.describe()


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _emit(record, fmt, out):
    if fmt == "json":
        out.write(json.dumps({k: _clean(v) for k, v in record.items()}, sort_keys=False) + "\n")
        return
    flat = {k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in record.items()}
    out.write(",".join(flat) + "\n")
    out.write(",".join(_csv_cell(v) for v in flat.values()) + "\n")


def _csv_cell(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    s = "" if v is None else str(v)
    if any(c in s for c in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _method_for(args, sigma):
    if args.solver == "interleaved" or args.solver == "neumann":
        if not isinstance(sigma, Geometric):
            raise qio.InputError(f"--solver {args.solver} needs a geometric step distribution")
    return SOLVERS[args.solver]


def cmd_analytic(args, out):
    e, target, rho0, prov = build_chain(args)
    sigma = _sigma(args)
    method = _method_for(args, sigma)
    base = {"chain_id": prov, "sigma": _sigma_desc(sigma)}
    if isinstance(sigma, Geometric):
        base["p"] = sigma.p
    t0 = time.perf_counter()
    try:
        res = generalized_hitting_time(e, sigma, target, rho0, method=method, tol=args.tol,
                                       max_terms=args.max_terms)
    except (PreconditionViolated, NonConvergent) as exc:
        record = dict(base, status="infinite", value=math.inf, reason=str(exc),
                      spectral_radius=getattr(exc, "spectral_radius", None),
                      solver=args.solver, wall_time=time.perf_counter() - t0)
        _emit(record, args.format, out)
        return EXIT_INFINITE
    record = dict(base, status="ok", value=res.value, rounds=res.rounds,
                  precondition_margin=res.precondition_margin, method=res.method,
                  solver=args.solver, tolerances={"neumann_tol": args.tol, "margin": 1e-9},
                  solver_stats={k: _clean(v) for k, v in res.solver_stats.items() if k != "wall_time"},
                  wall_time=time.perf_counter() - t0)
    _emit(record, args.format, out)
    return EXIT_OK


def cmd_montecarlo(args, out):
    e, target, rho0, prov = build_chain(args)
    sigma = _sigma(args)
    if args.n < 2:
        raise qio.InputError("--n must be at least 2")
    cfg = ProtocolConfig(sigma=sigma, max_steps=args.max_steps, seed=args.seed)
    base = {"chain_id": prov, "sigma": _sigma_desc(sigma), "seed": args.seed,
            "n": args.n, "max_steps": args.max_steps}
    try:
        est = estimate_hitting(e, target, rho0, cfg, args.n, workers=args.workers)
    except AllCensored as exc:
        _emit(dict(base, status="all_censored", reason=str(exc)), args.format, out)
        return EXIT_STATS
    except TrajectoryAborted as exc:
        _emit(dict(base, status="aborted", reason=str(exc)), args.format, out)
        return EXIT_STATS
    record = dict(base, status="ok" if est.censored_count == 0 else "censored",
                  mean=est.mean, stderr=est.stderr, censored_count=est.censored_count)
    _emit(record, args.format, out)
    return EXIT_OK


def cmd_sweep(args, out):
    e, target, rho0, prov = build_chain(args)
    if args.sigma is not None:
        raise qio.InputError("sweep needs a geometric step distribution; drop --sigma")
    ps = walks.p_grid(args.steps)
    table = sweep(e, target, rho0, ps, method=SOLVERS[args.solver], mc_n=args.mc_n,
                  mc_seed=args.seed, max_steps=args.max_steps, threads=args.threads, tol=args.tol)
    if args.format == "csv":
        text = table.to_csv()
    else:
        text = json.dumps({"chain_id": prov, "solver": args.solver, "mc_n": args.mc_n,
                           "seed": args.seed, "columns": list(COLUMNS),
                           "rows": [{k: _clean(v) for k, v in r.items()} for r in table.to_records()]},
                          indent=1) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def _add_chain_args(p):
    g = p.add_argument_group("chain")
    g.add_argument("--chain", required=True,
                   choices=["grover-restricted", "grover-full", "cycle", "classical", "channel"])
    g.add_argument("--N", type=int, help="number of items (grover-restricted)")
    g.add_argument("--qubits", type=int, help="number of qubits (grover-full)")
    g.add_argument("--marked", type=int, default=0, help="marked item (grover-full)")
    g.add_argument("--L", type=int, help="cycle length (cycle)")
    g.add_argument("--P", help="transition matrix JSON (classical)")
    g.add_argument("--start", type=int, help="start state (classical)")
    g.add_argument("--target", help="target index (classical) or target JSON (channel)")
    g.add_argument("--channel", help="channel JSON (channel)")
    g.add_argument("--rho", help="initial state JSON (channel)")


def _add_common(p, sigma=True):
    if sigma:
        p.add_argument("--p", type=float, default=1.0, help="geometric measurement probability")
        p.add_argument("--sigma", help="explicit step distribution JSON")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--solver", choices=sorted(SOLVERS), default="dense")
    p.add_argument("--tol", type=float, default=1e-10, help="Neumann stopping tolerance")
    p.add_argument("--max-terms", type=int, default=1_000_000, help="Neumann term budget")


def make_parser():
    parser = argparse.ArgumentParser(prog="qhitting", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analytic", help="hitting time from the resolvent formula")
    _add_chain_args(a)
    _add_common(a)

    m = sub.add_parser("montecarlo", help="Monte Carlo estimate of the hitting time")
    _add_chain_args(m)
    _add_common(m)
    m.add_argument("--n", type=int, default=1000, help="number of trajectories")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    m.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("sweep", help="hitting time over the p grid 1/steps, ..., 1")
    _add_chain_args(s)
    s.add_argument("--sigma", help=argparse.SUPPRESS)
    _add_common(s, sigma=False)
    s.set_defaults(solver="interleaved", format="csv")
    s.add_argument("--steps", type=int, default=100, help="grid size (p = k/steps)")
    s.add_argument("--mc-n", type=int, default=0, help="trajectories per p (0: analytic only)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    s.add_argument("--threads", type=int, default=None, help="worker threads (default: $QHITTING_THREADS or 1)")
    s.add_argument("--output", "-o", help="write the table here instead of stdout")
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    handlers = {"analytic": cmd_analytic, "montecarlo": cmd_montecarlo, "sweep": cmd_sweep}
    try:
        return handlers[args.command](args, out)
    except (qio.InputError, ValidationError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
