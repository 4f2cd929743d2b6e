"""Command-line entry point: ``ccportfolio {exact,nn,metrics,merge}``.

Exit codes: 0 success, 1 data or domain failure, 2 usage error. Every
output file ``F`` is accompanied by ``F.manifest``, a flat ``key=value``
file recording the resolved parameters, input digests and run time.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import parse_bounds, read_frontier, read_orlib, write_frontier
from .errors import DomainError, InfeasibleError, PortfolioError
from .exact_frontier import frontier_from_records, trace_standard_frontier
from .heuristic import HeuristicConfig, run
from .metrics import cells_to_csv, merge_cells, merge_frontiers, render_report, single_frontier_cells

log = logging.getLogger("ccportfolio")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(out) -> Path:
    return Path(str(out) + ".manifest")


def write_manifest(out, command: str, params: dict, inputs: dict, started: float) -> None:
    lines = [f"command={command}", f"version={__version__}"]
    lines += [f"{k}={v}" for k, v in params.items()]
    lines += [f"input.{name}={path}" for name, path in inputs.items()]
    lines += [f"input.{name}.sha256={_digest(path)}" for name, path in inputs.items()]
    lines.append(f"output={out}")
    lines.append(f"output.sha256={_digest(out)}")
    lines.append(f"duration_seconds={time.perf_counter() - started:.3f}")
    manifest_path(out).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, sep, value = line.partition("=")
        if sep:
            out[key.strip()] = value.strip()
    return out


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _tagged(text):
    tag, sep, path = text.partition("=")
    if not sep or not tag or not path:
        raise argparse.ArgumentTypeError(f"expected tag=file, got {text!r}")
    return tag, path


def cmd_exact(args) -> int:
    started = time.perf_counter()
    universe = read_orlib(args.data)
    frontier = trace_standard_frontier(universe, args.lambdas)
    write_frontier(args.out, frontier.points)
    log.info("standard frontier: %d points from %d lambdas, max gap %.3g",
             len(frontier.points), args.lambdas, frontier.max_gap)
    write_manifest(args.out, "exact", {"lambdas": args.lambdas, "points": len(frontier.points),
                                       "max_gap": repr(frontier.max_gap)},
                   {"data": args.data}, started)
    return 0


def _check_bounds_admit(k: int, lower: np.ndarray, upper: np.ndarray) -> None:
    # cheapest and richest K-subsets bound every selection's sums
    if np.sort(lower)[:k].sum() > 1 + 1e-12:
        raise InfeasibleError(f"every {k}-asset selection has lower bounds summing above 1")
    if np.sort(upper)[::-1][:k].sum() < 1 - 1e-12:
        raise InfeasibleError(f"every {k}-asset selection has upper bounds summing below 1")


def cmd_nn(args) -> int:
    started = time.perf_counter()
    universe = read_orlib(args.data)
    if args.k > universe.n:
        raise DomainError(f"--k {args.k} exceeds the {universe.n} assets in {args.data}")
    inputs = {"data": args.data}
    if args.bounds:
        lower, upper = parse_bounds(Path(args.bounds).read_text(), universe.n, args.eps, args.delta_max)
        inputs["bounds"] = args.bounds
    else:
        lower, upper = np.full(universe.n, args.eps), np.full(universe.n, args.delta_max)
    _check_bounds_admit(args.k, lower, upper)
    config = HeuristicConfig(
        delta_lambda=args.dlambda, pop_size=args.pop, repetitions=args.reps, seed=args.seed,
        inner_T=args.inner_t, inner_R=args.inner_r,
    )
    archive = run(universe, args.k, lower, upper, config, workers=args.workers)
    write_frontier(args.out, archive.points)
    log.info("NN frontier: %d points from %d evaluations", len(archive.points), archive.evaluations)
    params = {
        "k": args.k, "eps": args.eps, "delta_max": args.delta_max, "dlambda": args.dlambda,
        "pop": args.pop, "reps": args.reps, "seed": args.seed, "inner_t": config.rounds(),
        "inner_r": config.candidates_per_round(universe.n), "evaluations": archive.evaluations,
        "points": len(archive.points), "truncated_relaxations": archive.truncated,
    }
    write_manifest(args.out, "nn", params, inputs, started)
    return 0


def _source_tag(records, default="heuristic") -> str:
    tags = Counter(r.source for r in records if r.source)
    return tags.most_common(1)[0][0] if tags else default


def cmd_metrics(args) -> int:
    started = time.perf_counter()
    standard = frontier_from_records(read_frontier(args.standard))
    heuristic = read_frontier(args.heuristic)
    if not heuristic:
        raise DomainError(f"heuristic frontier {args.heuristic} is empty")
    evaluations = args.evaluations
    if evaluations is None and manifest_path(args.heuristic).exists():
        value = read_manifest(manifest_path(args.heuristic)).get("evaluations")
        evaluations = int(value) if value else None
    cells = single_frontier_cells(standard, heuristic, _source_tag(heuristic), evaluations)
    Path(args.out).write_text(render_report(cells))
    if args.csv:
        Path(args.csv).write_text(cells_to_csv(cells))
    write_manifest(args.out, "metrics", {"evaluations": evaluations or ""},
                   {"standard": args.standard, "heuristic": args.heuristic}, started)
    return 0


def cmd_merge(args) -> int:
    started = time.perf_counter()
    standard = frontier_from_records(read_frontier(args.standard))
    named = {tag: read_frontier(path) for tag, path in args.inputs}
    merged = merge_frontiers(named)
    write_frontier(args.out, merged.points)
    cells = merge_cells(merged, standard)
    Path(args.report).write_text(render_report(cells))
    if args.csv:
        Path(args.csv).write_text(cells_to_csv(cells))
    inputs = {"standard": args.standard, **{f"frontier.{tag}": path for tag, path in args.inputs}}
    write_manifest(args.out, "merge", {"points": len(merged.points)}, inputs, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccportfolio", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="trace the exact standard frontier")
    p.add_argument("--data", required=True, help="OR-Library portfolio file")
    p.add_argument("--lambdas", required=True, type=int, help="number of lambda values (>= 2)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("nn", help="run the Hopfield heuristic")
    p.add_argument("--data", required=True)
    p.add_argument("--k", required=True, type=int, help="assets per portfolio")
    p.add_argument("--eps", type=float, default=0.01, help="lower bound for every asset")
    p.add_argument("--delta-max", type=float, default=1.0, help="upper bound for every asset")
    p.add_argument("--bounds", help="per-asset bounds file, lines 'i eps delta' (1-based)")
    p.add_argument("--dlambda", type=float, default=0.1)
    p.add_argument("--pop", type=int, default=40)
    p.add_argument("--reps", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inner-t", type=int, default=None, help="rounds per lambda (default pop/2)")
    p.add_argument("--inner-r", type=int, default=None, help="candidates per round (default 2N)")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("metrics", help="distance, occupancy and persistence of one frontier")
    p.add_argument("--standard", required=True)
    p.add_argument("--heuristic", required=True)
    p.add_argument("--evaluations", type=_positive_int)
    p.add_argument("--out", required=True, help="text report")
    p.add_argument("--csv", help="also write the report cells as CSV")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("merge", help="merge tagged frontiers and report per-source statistics")
    p.add_argument("--standard", required=True)
    p.add_argument("--inputs", required=True, nargs="+", type=_tagged, metavar="TAG=FILE")
    p.add_argument("--out", required=True, help="merged frontier CSV")
    p.add_argument("--report", required=True, help="text report")
    p.add_argument("--csv", help="also write the report cells as CSV")
    p.set_defaults(func=cmd_merge)
    return parser


def _check_usage(parser, args) -> None:
    if args.command == "exact" and args.lambdas < 2:
        parser.error("--lambdas must be >= 2")
    if args.command == "nn":
        if args.k < 1:
            parser.error("--k must be >= 1")
        if args.pop < 2:
            parser.error("--pop must be >= 2")
        if not 0 < args.dlambda <= 1:
            parser.error("--dlambda must lie in (0, 1]")
        if not 0 <= args.eps <= args.delta_max <= 1:
            parser.error("bounds must satisfy 0 <= --eps <= --delta-max <= 1")
    if args.command == "merge":
        tags = [t for t, _ in args.inputs]
        dupes = sorted(t for t, c in Counter(tags).items() if c > 1)
        if dupes:
            parser.error(f"duplicate input tag(s): {', '.join(dupes)}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_usage(parser, args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (PortfolioError, OSError) as exc:
        print(f"ccportfolio {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
