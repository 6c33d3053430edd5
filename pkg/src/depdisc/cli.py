"""Command line: discovery runs, oracle checks and the two experiments.

Inputs are CSV paths or ``builtin:NAME`` (``fig2a``, ``tax``, ``two-node``,
``lineitem[:ROWS]``, ``lowcard[:ROWS]``, ``wide[:ROWS]``).

Exit codes: 0 ok, 1 usage, 2 unreadable input, 3 oracle or resource refusal.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import datasets
from .cluster import ClusterConfig
from .model import FD, InputError, load_csv, render_all
from .oracle import OracleLimitError, OracleLimits, brute
from .plans import ALGORITHMS, ConfigError, PlanConfig, discover, run_naive_intersection

EXIT_USAGE, EXIT_INPUT, EXIT_REFUSED = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def load_input(source: str, null_equal: bool = True):
    """Relation plus optional explicit horizontal parts."""
    if not source.startswith("builtin:"):
        return load_csv(source, null_equal=null_equal), None
    name, _, arg = source[len("builtin:"):].partition(":")
    rows = int(arg) if arg else None
    if name == "fig2a":
        return datasets.fig2a(), None
    if name == "tax":
        return datasets.tax(), None
    if name == "two-node":
        return datasets.two_node_example()
    if name == "lineitem":
        return datasets.lineitem(rows or 50_000), None
    if name == "lowcard":
        return datasets.low_cardinality_synthetic(rows or 5000), None
    if name == "wide":
        return datasets.wide_synthetic(rows or 500), None
    raise InputError(f"unknown builtin relation {name!r}")


def _write(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _config(args, algo: str | None = None, ldp: int | None = None) -> PlanConfig:
    try:
        cluster = ClusterConfig(k=args.workers, memory_budget=args.memory_budget, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return PlanConfig(
        algorithm=algo or args.algo,
        ldp=ldp or args.ldp,
        dep_kind=getattr(args, "dep", FD),
        cluster=cluster,
        sampling_seed=args.seed,
        keep_trivial=getattr(args, "keep_trivial", False),
    ).validate()


def cmd_discover(args) -> int:
    config = _config(args)
    r, _ = load_input(args.input, null_equal=not args.null_unequal)
    result = discover(r, config)
    out = result.to_dict(config)
    _write(out, args.output)
    if args.metrics:
        _write({"stages": result.ledger.report(), "summary": result.ledger.summary()}, args.metrics)
    return 0


def cmd_oracle(args) -> int:
    r, _ = load_input(args.input, null_equal=not args.null_unequal)
    limits = OracleLimits(args.max_rows, args.max_cols, args.max_dc_predicates)
    deps = brute(args.dep, r, limits)
    _write({"dependencies": render_all(deps, r.attribute_names), "count": len(deps)}, args.output)
    return 0


def cmd_experiment_precision(args) -> int:
    r, parts = load_input(args.input)
    rows = []
    counts = [int(p) for p in args.partitions.split(",") if p.strip()]
    for p in counts:
        res = run_naive_intersection(r, p, seed=args.seed, parts=parts if parts and p == len(parts) else None)
        rows.append({"p": p, "naive": len(res.naive_set), "holding": len(res.holding), "precision": res.precision})
    print(f"{'p':>4} {'|naive|':>8} {'precision':>10}", file=sys.stderr)
    for row in rows:
        print(f"{row['p']:>4} {row['naive']:>8} {row['precision']:>10.3f}", file=sys.stderr)
    _write({"input": args.input, "seed": args.seed, "rows": rows}, args.output)
    return 0


def cmd_experiment_compare(args) -> int:
    r, _ = load_input(args.input)
    rows = []
    for ldp in (1, 2):
        config = _config(args, ldp=ldp)
        start = time.perf_counter()
        result = discover(r, config)
        elapsed = time.perf_counter() - start
        led = result.ledger
        rows.append({
            "plan": f"LDP{ldp}",
            "time_s": round(elapsed, 3),
            "shuffle_bytes": led.total_bytes(),
            "X_bytes": led.X(),
            "Y_units": led.Y(),
            "dependencies": len(result.dependencies),
            "comparisons": result.stats.get("comparisons"),
        })
    print(f"{args.algo} on {args.input}, k={args.workers}", file=sys.stderr)
    print(f"{'plan':<6}{'time (s)':>10}{'shuffle (MB)':>14}{'X (MB)':>10}{'Y (units)':>14}", file=sys.stderr)
    for row in rows:
        print(f"{row['plan']:<6}{row['time_s']:>10.2f}{row['shuffle_bytes'] / 1e6:>14.3f}"
              f"{row['X_bytes'] / 1e6:>10.3f}{row['Y_units']:>14d}", file=sys.stderr)
    _write({"input": args.input, "algorithm": args.algo, "k": args.workers, "plans": rows}, args.output)
    return 0


def _cluster_flags(p):
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--memory-budget", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depdisc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    d = sub.add_parser("discover")
    d.add_argument("--input", required=True)
    d.add_argument("--dep", choices=["fd", "ucc", "od", "dc"], default="fd")
    d.add_argument("--algo", choices=list(ALGORITHMS), default="tane")
    d.add_argument("--ldp", type=int, choices=[1, 2], default=2)
    _cluster_flags(d)
    d.add_argument("--output")
    d.add_argument("--metrics")
    d.add_argument("--keep-trivial", action="store_true")
    d.add_argument("--null-unequal", action="store_true")
    d.set_defaults(run=cmd_discover)

    o = sub.add_parser("oracle")
    o.add_argument("--input", required=True)
    o.add_argument("--dep", choices=["fd", "ucc", "od", "dc"], default="fd")
    o.add_argument("--max-rows", type=int, default=OracleLimits.max_rows)
    o.add_argument("--max-cols", type=int, default=OracleLimits.max_cols)
    o.add_argument("--max-dc-predicates", type=int, default=OracleLimits.max_dc_predicates)
    o.add_argument("--output")
    o.add_argument("--null-unequal", action="store_true")
    o.set_defaults(run=cmd_oracle)

    e = sub.add_parser("experiment-precision")
    e.add_argument("--input", required=True)
    e.add_argument("--partitions", default="2,5,10")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output")
    e.set_defaults(run=cmd_experiment_precision)

    c = sub.add_parser("experiment-compare")
    c.add_argument("--input", required=True)
    c.add_argument("--algo", choices=list(ALGORITHMS), default="tane")
    _cluster_flags(c)
    c.add_argument("--output")
    c.set_defaults(run=cmd_experiment_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except (UsageError, ConfigError) as exc:
        print(f"depdisc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"depdisc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OracleLimitError, MemoryError) as exc:
        print(f"depdisc: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
