"""Command-line front end.

Subcommands: ``analyze``, ``enumerate``, ``scale``, ``loop-reduce`` and ``walk``.
Exit status is 0 on success, 1 for bad input and 2 when a computation fails.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import AnalysisOptions, AnalysisRecord, csv_header, csv_row
from .chain_api import random_walk
from .chains import CHAINS, make_chain
from .errors import ComputationError, InputError, MixtimeError, NotUniform
from .instances import (
    enumerate_bipartite_graphs,
    enumerate_pairs,
    parse_degree_pair,
    parse_graph_line,
)
from .state_graph import build, export, walk_many

log = logging.getLogger("mixtime")

SWITCH_CHAINS = ("switch1", "switch2")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chain", choices=sorted(CHAINS), default="switch1")
    p.add_argument("--eps", type=float, default=analysis.DEFAULT_EPSILON)
    p.add_argument("--mixing-cap", type=int, default=20_000)
    p.add_argument("--build-cap", type=int, default=1_000_000)
    p.add_argument("--congestion-cap", type=int, default=analysis.DEFAULT_CONGESTION_CAP)
    p.add_argument("--stats-cap", type=int, default=analysis.DEFAULT_STATS_CAP)
    p.add_argument("--scheme", choices=("bfs", "canonical"), default="canonical")
    p.add_argument("--precision", choices=("single", "double"), default="double")
    p.add_argument("--threads", type=int, default=None, help="worker count (default: available cores)")
    p.add_argument("--eigensolver", choices=("auto", "dense", "lanczos"), default="auto")
    p.add_argument("--theory", action="store_true", help="also compute the published theoretical bound")
    p.add_argument("--out", help="CSV output path (default: stdout for batch commands)")


def _options(args) -> AnalysisOptions:
    return AnalysisOptions(
        epsilon=args.eps,
        mixing_cap=args.mixing_cap,
        build_cap=args.build_cap,
        congestion_cap=args.congestion_cap,
        stats_cap=args.stats_cap,
        scheme=args.scheme,
        precision=args.precision,
        threads=args.threads,
        theory=args.theory,
        eigensolver=args.eigensolver,
    )


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixtime", description="Exact mixing times and bounds for small Markov chains.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="analyze one instance")
    _add_common(p)
    p.add_argument("--instance", required=True, help='"a1,a2;b1,b2" or biadjacency rows "110;011"')
    p.add_argument("--fraction", type=float, default=None, help="also analyze the loop-reduced graph")
    p.add_argument("--export-graph", metavar="PREFIX", help="write PREFIX.edges.csv and PREFIX.states.csv")

    p = sub.add_parser("enumerate", help="analyze every small instance")
    _add_common(p)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-n2", type=int, default=None)
    p.add_argument("--file", help="one instance per line (degree pairs, biadjacency, graph6 or sparse6)")
    p.add_argument("--journal", help="completed-id journal for resuming")

    p = sub.add_parser("scale", help="scaling family experiment")
    _add_common(p)
    p.add_argument("--family", choices=("A", "B", "C"), default="A")
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--fits", help="also write the fitted models to this file")

    p = sub.add_parser("loop-reduce", help="enumeration on loop-reduced state graphs")
    _add_common(p)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-n2", type=int, default=None)
    p.add_argument("--file")
    p.add_argument("--fraction", type=float, default=0.99)

    p = sub.add_parser("walk", help="simulate the random walk")
    p.add_argument("--chain", choices=sorted(CHAINS), default="switch1")
    p.add_argument("--instance", required=True)
    p.add_argument("--steps", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--histogram", type=int, metavar="N", help="run N walks and print final-state frequencies")
    return parser


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with Path(path).open("w", newline="\n") as fh:
            yield fh


# --------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> list[AnalysisRecord]:
    opts = _options(args)
    instance = _parse_line(args.chain, args.instance)
    record, g = analysis.analyze_instance(args.chain, instance, opts)
    records = [record]
    if args.fraction is not None:
        from .state_graph import loop_reduce

        reduced = loop_reduce(g, args.fraction)
        records.append(analysis.analyze_graph(reduced, record.instance_id, args.chain, opts, variant="reduced"))
    if args.export_graph:
        export(g, f"{args.export_graph}.edges.csv", f"{args.export_graph}.states.csv")
    for rec in records:
        for key, value in asdict(rec).items():
            print(f"{key}: {analysis._fmt(value)}")
        if rec is not records[-1]:
            print()
    if args.out:
        with _output(args.out) as fh:
            fh.write(csv_header())
            for rec in records:
                fh.write(csv_row(rec))
    return records


# --------------------------------------------------------------------------
# batch helpers


def instance_texts(chain: str, max_n: int, max_n2: int | None, file: str | None):
    """Instance strings for a batch run, in a fixed order."""
    if file is not None:
        with Path(file).open() as fh:
            for raw in fh:
                line = raw.strip()
                for header in (">>graph6<<", ">>sparse6<<"):
                    if line.startswith(header):
                        line = line[len(header):]
                if line and not line.startswith("#"):
                    yield line
        return
    max_n2 = max_n if max_n2 is None else max_n2
    if chain in SWITCH_CHAINS:
        for pair in enumerate_pairs(max_n, max_n2):
            yield str(pair)
    else:
        # K_{1,1} gives a period-2 matching chain, so start at n = 2
        for n in range(2, min(max_n, max_n2) + 1):
            for graph in enumerate_bipartite_graphs(n):
                yield str(graph)


def _parse_line(chain: str, text: str):
    # "1;1" reads as either encoding, so the chain decides
    if chain in SWITCH_CHAINS:
        return parse_degree_pair(text)
    return parse_graph_line(text)


def _job(task):
    """Analyze one instance; errors come back as values so a batch keeps going."""
    kind, chain, text, opts, fraction = task
    try:
        instance = _parse_line(chain, text)
        if kind == "loop":
            return list(analysis.analyze_loop_reduced(chain, instance, opts, fraction)), None
        return [analysis.analyze_instance(chain, instance, opts)[0]], None
    except MixtimeError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _run_batch(tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(_job, tasks)
    else:
        for t in tasks:
            yield _job(t)


def _workers(args) -> int:
    return args.threads or os.cpu_count() or 1


def _batch_opts(args) -> AnalysisOptions:
    opts = _options(args)
    # parallelism lives at the instance level; each instance runs single-threaded
    opts.threads = 1
    return opts


def cmd_enumerate(args) -> int:
    opts = _batch_opts(args)
    texts = list(instance_texts(args.chain, args.max_n, args.max_n2, args.file))
    done: set[str] = set()
    resume = False
    if args.journal and Path(args.journal).exists():
        done = set(Path(args.journal).read_text().split())
        resume = args.out is not None and Path(args.out).exists() and bool(done)
    tasks = [("plain", args.chain, t, opts, None) for t in texts if t not in done]
    failures = 0
    journal = Path(args.journal).open("a") if args.journal else None
    try:
        if resume:
            ctx = Path(args.out).open("a", newline="\n")
        else:
            ctx = _output(args.out)
        with ctx as fh:
            if not resume:
                fh.write(csv_header())
            for task, (records, error) in zip(tasks, _run_batch(tasks, _workers(args))):
                if error is not None:
                    failures += 1
                    log.warning("instance %s skipped: %s", task[2], error)
                    continue
                for rec in records:
                    fh.write(csv_row(rec))
                fh.flush()
                if journal:
                    journal.write(task[2] + "\n")
                    journal.flush()
    finally:
        if journal:
            journal.close()
    if failures:
        log.warning("%d instance(s) failed", failures)
    return 0


def cmd_loop_reduce(args) -> int:
    if args.chain == "matching2":
        raise NotUniform("matching2 has a non-uniform stationary distribution")
    opts = _batch_opts(args)
    texts = list(instance_texts(args.chain, args.max_n, args.max_n2, args.file))
    tasks = [("loop", args.chain, t, opts, args.fraction) for t in texts]
    with _output(args.out) as fh:
        fh.write(csv_header())
        for task, (records, error) in zip(tasks, _run_batch(tasks, _workers(args))):
            if error is not None:
                log.warning("instance %s skipped: %s", task[2], error)
                continue
            for rec in records:
                fh.write(csv_row(rec))
    return 0


def cmd_scale(args) -> int:
    if args.chain not in SWITCH_CHAINS:
        raise InputError("scaling families are degree sequence pairs; use switch1 or switch2")
    opts = _options(args)
    ns = list(range(args.n_min, args.n_max + 1))
    records, tau_fit, loglog = analysis.scale_family(args.family, args.chain, ns, opts)
    with _output(args.out) as fh:
        fh.write(csv_header())
        for rec in records:
            fh.write(csv_row(rec))
    lines = []
    if tau_fit is not None:
        lines.append(
            f"fit tau ~ lower_spectral: slope={tau_fit.slope:.12g} intercept={tau_fit.intercept:.12g} "
            f"r_squared={tau_fit.r_squared:.12g} n_points={tau_fit.n_points}"
        )
    if loglog is not None:
        lines.append(
            f"fit log(tau) ~ log(n): slope={loglog.slope:.12g} intercept={loglog.intercept:.12g} "
            f"r_squared={loglog.r_squared:.12g} n_points={loglog.n_points} (published exponent 2.27)"
        )
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.fits:
        Path(args.fits).write_text(text)
    # keep stdout pure CSV when the rows go there
    (sys.stderr if args.out is None else sys.stdout).write(text)
    return 0


def cmd_walk(args) -> int:
    chain = make_chain(args.chain, _parse_line(args.chain, args.instance))
    if args.histogram is None:
        start = chain.arbitrary_state()
        if chain.needs_weight_pass:
            chain.finalize_weights(build(chain, check=False).states)
        print(chain.encode(random_walk(chain, start, args.steps, args.seed)))
        return 0
    g = build(chain)
    # build() indexes the arbitrary state as 0
    finals = walk_many(g, 0, args.steps, args.histogram, seed=args.seed)
    counts = np.bincount(finals, minlength=g.n_states)
    print("state,count,frequency")
    for i in range(g.n_states):
        print(f"{g.encode(i)},{counts[i]},{counts[i] / args.histogram:.12g}")
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "enumerate": cmd_enumerate,
    "scale": cmd_scale,
    "loop-reduce": cmd_loop_reduce,
    "walk": cmd_walk,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
