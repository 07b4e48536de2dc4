"""Command-line driver: ``dpopkit generate|solve|verify|bench|dump-tree``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench
from . import utility as U
from .errors import DcopError, InstanceSyntaxError, SemanticError
from .generators import RNG_ALGORITHM, GridParams, RandomGraphParams, generate_grid, generate_random
from .instance_io import load_instance, save_instance
from .local_solver import STRATEGIES
from .model import build_constraint_graph, evaluate
from .oracle import DEFAULT_CAP, brute_force
from .pseudotree import build_pseudotree, compute_separators, dump_tree
from .runtime import solve

FIXTURES_ENV = "DPOPKIT_FIXTURES"
PACKAGE_FIXTURES = Path(__file__).parent / "fixtures"


def fixture_dir() -> Path:
    return Path(os.environ.get(FIXTURES_ENV, PACKAGE_FIXTURES))


def resolve_path(name: str) -> Path:
    """Use ``name`` as given if it exists, else look it up in the fixture directory."""
    p = Path(name)
    if p.exists():
        return p
    candidate = fixture_dir() / name
    return candidate if candidate.exists() else p


def _csv(kind):
    return lambda s: [kind(x) for x in s.split(",") if x]


class _Reported(Exception):
    """An error already printed to stderr; the command exits with status 1."""


def _load(path: str):
    try:
        return load_instance(resolve_path(path))
    except (InstanceSyntaxError, SemanticError) as e:
        print(f"{path}: {e}", file=sys.stderr)
        raise _Reported from e
    except OSError as e:
        print(f"{path}: {e.strerror or e}", file=sys.stderr)
        raise _Reported from e


def cmd_generate(args) -> int:
    if args.kind == "random":
        params = RandomGraphParams(args.agents, args.vars, args.dom, args.p1, args.p2, args.seed)
        inst = generate_random(params)
        comments = [f"generator: random {params.describe()}"]
    else:
        params = GridParams(args.topology, args.dom, args.capacity, args.seed, args.nodes)
        inst = generate_grid(params)
        comments = [f"generator: grid topology={args.topology} nodes={args.nodes} dom={args.dom} "
                    f"capacity={params.capacity} seed={args.seed}"]
    comments.append(f"rng: {RNG_ALGORITHM}")
    save_instance(inst, args.out, comments)
    print(f"seed={args.seed} wrote {args.out} ({len(inst.variables)} variables, {len(inst.constraints)} constraints)")
    return 0


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    report = solve(inst, args.strategy, timeout=args.timeout,
                   scheduler="deterministic" if args.deterministic else args.scheduler,
                   deterministic_cost=args.deterministic or args.cost == "enumeration",
                   latency=args.latency)
    if args.dump_tree:
        sys.stdout.write(dump_tree(report.tree, report.separators))
    if args.trace:
        sys.stdout.write("".join(line + "\n" for line in report.trace))
    sys.stdout.write(report.to_text(include_wall=not args.deterministic))
    return report.exit_code


def cmd_verify(args) -> int:
    inst = _load(args.instance)
    oracle = brute_force(inst, cap=args.cap, skip_infeasible=args.skip_infeasible)
    print(f"oracle utility={U.fmt(oracle.utility)}")
    if oracle.assignment is not None:
        print("oracle assignment " + " ".join(f"{v}={x}" for v, x in sorted(oracle.assignment.items())))
    ok = True
    for s in args.strategies:
        rep = solve(inst, s, timeout=args.timeout)
        match = rep.utility == oracle.utility
        if rep.assignment is not None:
            match = match and evaluate(inst, rep.assignment) == rep.utility
        ok = ok and match
        print(f"{s}: status={rep.status.value} utility={U.fmt(rep.utility)} {'match' if match else 'MISMATCH'}")
    return 0 if ok else 4


def cmd_bench(args) -> int:
    if args.topology:
        specs = bench.grid_sweep(args.topology, args.dom, args.strategies, args.reps, args.seed, args.timeout)
    else:
        specs = bench.random_sweep(args.agents, args.vars, args.dom, args.p1, args.p2, args.strategies,
                                   args.reps, args.seed, args.timeout)
    rows = bench.run_sweep(specs, jobs=args.jobs)
    with open(args.out, "w", newline="") as fh:
        bench.write_rows(rows, fh)
    summary = bench.format_summary(bench.summarize(rows))
    if args.summary:
        Path(args.summary).write_text(summary)
    sys.stdout.write(summary)
    return 0


def cmd_dump_tree(args) -> int:
    inst = _load(args.instance)
    graph = build_constraint_graph(inst)
    tree = build_pseudotree(graph)
    sys.stdout.write(dump_tree(tree, compute_separators(tree, graph, inst)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpopkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a benchmark instance")
    gk = g.add_subparsers(dest="kind", required=True)
    r = gk.add_parser("random", help="Erdos-Renyi G(n, M) instance")
    r.add_argument("--agents", type=int, default=5)
    r.add_argument("--vars", type=int, default=15)
    r.add_argument("--dom", type=int, default=6)
    r.add_argument("--p1", type=float, default=0.6)
    r.add_argument("--p2", type=float, default=0.6)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    gg = gk.add_parser("grid", help="microgrid instance")
    gg.add_argument("--topology", required=True, help="ring, bus13, bus34, bus37 or bus123")
    gg.add_argument("--nodes", type=int, help="node count for ring")
    gg.add_argument("--dom", type=int, default=5, help="odd flow-domain cardinality")
    gg.add_argument("--capacity", type=int, help="line capacity (default: max flow value)")
    gg.add_argument("--seed", type=int, default=0)
    gg.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance with DPOP")
    s.add_argument("instance")
    s.add_argument("--strategy", choices=STRATEGIES, default="sparse")
    s.add_argument("--timeout", type=float, default=600.0, help="seconds (default 600)")
    s.add_argument("--dump-tree", action="store_true")
    s.add_argument("--trace", action="store_true")
    s.add_argument("--deterministic", action="store_true",
                   help="single-threaded scheduler, enumeration-count clock, no wall time in output")
    s.add_argument("--scheduler", choices=("deterministic", "threads"), default="threads")
    s.add_argument("--cost", choices=("wall", "enumeration"), default="wall")
    s.add_argument("--latency", type=int, default=0, help="simulated per-message latency (ns)")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="compare DPOP against the brute-force oracle")
    v.add_argument("instance")
    v.add_argument("--strategies", type=_csv(str), default=list(STRATEGIES))
    v.add_argument("--cap", type=int, default=DEFAULT_CAP)
    v.add_argument("--skip-infeasible", action="store_true")
    v.add_argument("--timeout", type=float, default=600.0)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="run a parameter sweep and write CSV")
    b.add_argument("--agents", type=_csv(int), default=[5])
    b.add_argument("--vars", type=_csv(int), default=[15])
    b.add_argument("--dom", type=_csv(int), default=[6])
    b.add_argument("--p1", type=_csv(float), default=[0.6])
    b.add_argument("--p2", type=_csv(float), default=[0.6])
    b.add_argument("--topology", type=_csv(str), default=[],
                   help="grid sweep instead of random: e.g. bus13,ring:4")
    b.add_argument("--strategies", type=_csv(str), default=["sparse"])
    b.add_argument("--reps", type=int, default=50)
    b.add_argument("--seed", type=int, default=0, help="base seed; repetition r uses seed+r")
    b.add_argument("--timeout", type=float, default=600.0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True)
    b.add_argument("--summary", help="also write the summary CSV here")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("dump-tree", help="print the max-degree pseudo-tree")
    d.add_argument("instance")
    d.set_defaults(func=cmd_dump_tree)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    for name in getattr(args, "strategies", []) or []:
        if name not in STRATEGIES:
            print(f"unknown strategy {name!r}", file=sys.stderr)
            return 1
    try:
        return args.func(args)
    except _Reported:
        return 1
    except DcopError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
