"""Command-line front end.

Exit codes: 0 success, 1 domain failure (bad net, aborted simulation),
2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .engine import SimConfig, SimulationError, collect_stats, simulate
from .multiset import ReadArcMode, RemovalPolicy
from .netio import ParseError, NetValidationError, parse_net, read_trace, serialize_net, \
    stats_text, write_stats, write_trace
from .timeval import format_time, is_inf, parse_time
from .transform import ElementClass, TransformError, classify_net, format_report, transform_element


class _Failure(Exception):
    """Domain failure: reported on stderr, exit code 1."""


def _time_arg(text: str):
    try:
        return parse_time(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _load_net(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise _Failure(f"{path}: {e.strerror}") from None
    return parse_net(data)


def _color() -> bool:
    return os.environ.get("XTPN_COLOR", "1") != "0" and sys.stdout.isatty()


def _numbered(path: str, k: int, n: int) -> Path:
    p = Path(path)
    return p if n == 1 else p.with_name(f"{p.stem}.{k}{p.suffix}")


def cmd_validate(args) -> int:
    try:
        _load_net(args.net)
    except NetValidationError as e:
        for line, v in e.violations:
            print(f"{args.net}:{line}: {v}")
        return 1
    print(f"{args.net}: ok")
    return 0


def _replicate(job):
    net, config, trace_path, stats_path = job
    trace = simulate(net, config)
    if trace_path:
        with open(trace_path, "wb") as fh:
            write_trace(trace, fh)
    if stats_path:
        with open(stats_path, "wb") as fh:
            write_stats(collect_stats(trace), fh)
    return config.seed, len(trace.records), trace.end_time


def cmd_simulate(args) -> int:
    net = _load_net(args.net)
    if is_inf(args.max_time) and args.max_events is None:
        raise _Failure("--max-time inf needs --max-events")
    n = args.replications
    if n < 1:
        raise _Failure("--replications must be >= 1")
    jobs = []
    for k in range(n):
        config = SimConfig(
            seed=args.seed + k,
            max_time=args.max_time,
            resolution=args.resolution,
            horizon_cap=args.horizon_cap,
            removal_policy=RemovalPolicy(args.removal_policy),
            read_arc_mode=ReadArcMode(args.read_arc_mode),
            max_events=args.max_events,
        )
        jobs.append((net, config,
                     args.trace and _numbered(args.trace, k, n),
                     args.stats and _numbered(args.stats, k, n)))
    if n == 1:
        results = [_replicate(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=min(n, os.cpu_count() or 1)) as pool:
            results = list(pool.map(_replicate, jobs))
    for seed, events, end in results:
        print(f"seed={seed} events={events} end_time={format_time(end)}")
    return 0


def cmd_classify(args) -> int:
    net = _load_net(args.net)
    sys.stdout.write(format_report(classify_net(net), color=_color()))
    return 0


def cmd_transform(args) -> int:
    net = _load_net(args.net)
    out = transform_element(net, args.element, ElementClass(args.to), duration=args.duration,
                            alpha=args.alpha, beta=args.beta, gamma=args.gamma)
    text = serialize_net(out)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_stats(args) -> int:
    try:
        trace = read_trace(Path(args.trace).read_bytes())
    except OSError as e:
        raise _Failure(f"{args.trace}: {e.strerror}") from None
    except ValueError as e:
        raise _Failure(f"{args.trace}: {e}") from None
    text = stats_text(collect_stats(trace))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xtpn", description="Extended time Petri net simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a net file")
    p.add_argument("net")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run the event-driven engine")
    p.add_argument("net")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-time", type=_time_arg, default=parse_time("100"))
    p.add_argument("--resolution", type=int, default=1000)
    p.add_argument("--horizon-cap", type=_time_arg, default=parse_time("1000"))
    p.add_argument("--removal-policy", choices=[r.value for r in RemovalPolicy], default="oldest")
    p.add_argument("--read-arc-mode", choices=[m.value for m in ReadArcMode], default="1")
    p.add_argument("--max-events", type=int)
    p.add_argument("--replications", type=int, default=1,
                   help="independent runs with seeds seed, seed+1, ...; output files get numbered")
    p.add_argument("--trace", metavar="PATH")
    p.add_argument("--stats", metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="report element and net classes")
    p.add_argument("net")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("transform", help="rewrite one element's intervals")
    p.add_argument("net")
    p.add_argument("--element", required=True)
    p.add_argument("--to", required=True, choices=[c.value for c in ElementClass])
    p.add_argument("--duration", type=_time_arg)
    p.add_argument("--alpha", type=_time_arg, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--beta", type=_time_arg, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--gamma", type=_time_arg, nargs=2, metavar=("LO", "HI"))
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("stats", help="statistics of a stored trace")
    p.add_argument("trace")
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except NetValidationError as e:
        for line, v in e.violations:
            print(f"{getattr(args, 'net', '')}:{line}: {v}", file=sys.stderr)
    except ParseError as e:
        print(f"{args.net}:{e}", file=sys.stderr)
    except (_Failure, TransformError, SimulationError) as e:
        print(f"error: {e}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
