"""Command-line front end.

Exit codes: 0 success, 1 input error (files, traces, configs), 2 argument
error, 3 engine disagreement in ``verify``.
"""
from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from .errors import (
    ConfigError,
    EngineMismatchError,
    InvalidPatternError,
    TopologyParseError,
    TraceError,
)
from .lattice import Lattice, RequestPattern
from .sim import SimConfig, replay_trace, read_config, run_simulation, write_decision_log, write_event_log, write_metrics_csv
from .topology import builtin_topology, load_topology

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ARGS = 2
EXIT_MISMATCH = 3


def _pattern(text: str) -> RequestPattern:
    try:
        return RequestPattern.parse(text)
    except InvalidPatternError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_topology(source: str):
    if source.startswith("builtin:"):
        return builtin_topology(source.split(":", 1)[1])
    return load_topology(source)


def _err(msg: str) -> None:
    print(f"eonlattice: {msg}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eonlattice",
        description="Slot-interval lattice model and first-fit RSA for flexible-grid optical networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="node counts and Hasse diagram of the slot lattice")
    p.add_argument("--pattern", type=_pattern, required=True, help="uniform:K or pow2:P")
    p.add_argument("-T", dest="slots", type=int, required=True, help="slots per fiber")
    p.add_argument("--dot", metavar="FILE", help="write the Hasse diagram as Graphviz DOT ('-' for stdout)")
    p.add_argument("--stats", action="store_true", help="print node count per level")

    p = sub.add_parser("rsa", help="replay a request trace through the layered first-fit engine")
    p.add_argument("--topology", required=True, help="edge-list file or builtin:NAME")
    p.add_argument("--pattern", type=_pattern, required=True)
    p.add_argument("-T", dest="slots", type=int, required=True)
    p.add_argument("--trace", required=True, help="CSV with header id,event,src,dst,b")
    p.add_argument("--out", required=True, help="decision log CSV ('-' for stdout)")

    p = sub.add_parser("simulate", help="run a dynamic-traffic simulation from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="metrics CSV ('-' for stdout)")
    p.add_argument("--events", help="optional per-event log CSV")

    p = sub.add_parser("verify", help="cross-check layered and slot-by-slot engines on a random trace")
    p.add_argument("--topology", required=True, help="edge-list file or builtin:NAME")
    p.add_argument("--pattern", type=_pattern, required=True)
    p.add_argument("-T", dest="slots", type=int, required=True)
    p.add_argument("--requests", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--load", type=float, default=100.0, help="offered load in Erlangs (default 100)")
    return parser


def _open_out(target: str):
    if target == "-":
        return sys.stdout, False
    return open(target, "w", newline=""), True


def cmd_lattice(args, parser) -> int:
    try:
        lattice = Lattice(args.pattern, args.slots)
    except InvalidPatternError as exc:
        parser.error(str(exc))
    per_level = Counter(node.width for node in lattice.nodes)
    levels = ",".join(f"{w}:{per_level[w]}" for w in lattice.levels)
    if args.stats or not args.dot:
        print(f"nodes={len(lattice)} levels={levels}")
    if args.dot:
        fh, close = _open_out(args.dot)
        try:
            fh.write(lattice.to_dot())
        finally:
            if close:
                fh.close()
    return EXIT_OK


def cmd_rsa(args, parser) -> int:
    try:
        args.pattern.validate(args.slots)
    except InvalidPatternError as exc:
        parser.error(str(exc))
    try:
        topo = _load_topology(args.topology)
        config = SimConfig(n_slots=args.slots, pattern=args.pattern, topology=topo, topology_source=args.topology)
        decisions, metrics = replay_trace(config, Path(args.trace))
    except (OSError, TopologyParseError, TraceError, ConfigError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    fh, close = _open_out(args.out)
    try:
        write_decision_log(decisions, topo, fh)
    finally:
        if close:
            fh.close()
    print(f"offered={metrics.offered} blocked={metrics.blocked}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args, parser) -> int:
    try:
        config = read_config(args.config)
        metrics, run = run_simulation(config, return_run=True)
    except (OSError, ConfigError, TopologyParseError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except EngineMismatchError as exc:
        _err(str(exc))
        return EXIT_MISMATCH
    fh, close = _open_out(args.out)
    try:
        write_metrics_csv(metrics, fh)
    finally:
        if close:
            fh.close()
    if args.events:
        with open(args.events, "w", newline="") as fh:
            write_event_log(run, fh)
    print(
        f"offered={metrics.offered} blocked={metrics.blocked} "
        f"blocking_probability={metrics.blocking_probability:.6g}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_verify(args, parser) -> int:
    try:
        args.pattern.validate(args.slots)
    except InvalidPatternError as exc:
        parser.error(str(exc))
    if args.requests < 1 or args.load <= 0:
        parser.error("--requests and --load must be positive")
    try:
        topo = _load_topology(args.topology)
        config = SimConfig(
            n_slots=args.slots,
            pattern=args.pattern,
            topology=topo,
            arrival_rate=1.0,
            mean_holding=args.load,
            num_requests=args.requests,
            seed=args.seed,
            engine="both",
            topology_source=args.topology,
        )
        metrics = run_simulation(config)
    except (OSError, ConfigError, TopologyParseError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except EngineMismatchError as exc:
        print("mismatches=1")
        _err(f"first diverging step {exc.step}: layered={exc.layered!r} oracle={exc.oracle!r}")
        return EXIT_MISMATCH
    print(f"mismatches=0 ratio={metrics.check_ratio:.6g}")
    print(
        f"offered={metrics.offered} blocked={metrics.blocked} "
        f"layered_checks={metrics.layered_checks} oracle_checks={metrics.oracle_checks}",
        file=sys.stderr,
    )
    return EXIT_OK


COMMANDS = {"lattice": cmd_lattice, "rsa": cmd_rsa, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "slots", 1) < 1:
        parser.error("-T must be >= 1")
    return COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
