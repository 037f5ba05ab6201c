"""Command-line front-end: ``sparsecount <command> ...``.

Exit codes: ``check`` returns 0, 1 or 2 for the answers 1, 0 and unknown.
Usage, graph-file and query errors return 64; failures inside the
optimiser, oracle or decomposition return 65.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import statistics
import sys
import time
from fractions import Fraction

import numpy as np

from .counting import exact_weights
from .errors import GraphFormatError, QuerySyntaxError, SparseCountError
from .generators import FAMILIES, family
from .graph import FRATERNAL, TRANSITIVE, LabeledGraph, augment, load_graph, orient
from .logic import counting_atoms, free_vars, to_text
from .optimizer import optimize, partial_dominating_set
from .oracle import evaluate_formula, instability_witness
from .parser import parse_query
from .qe import check_sentence, functional_setup

EXIT_USAGE = 64
EXIT_FAILURE = 65
DEFAULT_BENCH_QUERY = "# x. (# y. E(x,y) > 2) > 100"

logger = logging.getLogger("sparsecount")


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _read_graph(path: str) -> LabeledGraph:
    try:
        with open(path, encoding="utf-8") as fh:
            return load_graph(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read graph file: {exc}") from None


def _read_query(args) -> str:
    if args.query_file:
        try:
            with open(args.query_file, encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read query file: {exc}") from None
    if args.query is None:
        raise UsageError("a query is required (inline or --query-file)")
    return args.query


def _emit(args, record: dict, human: str) -> None:
    if args.format == "json":
        print(json.dumps(record, sort_keys=True))
    else:
        print(human)


# ---------------------------------------------------------------- commands

def cmd_check(args) -> int:
    g = _read_graph(args.graph)
    f = parse_query(_read_query(args))
    if free_vars(f):
        raise UsageError(f"not a sentence; free variables {sorted(free_vars(f))}")
    result = check_sentence(g, f, args.epsilon)
    record = result.record()
    answer = record["answer"]
    if args.format == "json":
        print(json.dumps(record, sort_keys=True))
    else:
        print(answer)
        for r in result.rounds:
            logger.info("round %s threshold=%s +preds=%d +funcs=%d indegree=%d", r["quantifier"],
                        r["threshold"], r["new_predicates"], r["new_functions"], r["indegree"])
    return {"1": 0, "0": 1}.get(answer, 2)


def _body_and_vars(args):
    body = parse_query(_read_query(args))
    if counting_atoms(body):
        raise UsageError("the counted body must not contain counting atoms")
    y = args.count_var
    xs = tuple(sorted(free_vars(body) - {y}))
    return body, y, xs


def cmd_count(args) -> int:
    g = _read_graph(args.graph)
    body, y, xs = _body_and_vars(args)
    n = g.vertex_count
    if args.tuple is not None:
        try:
            values = [int(v) for v in args.tuple.split(",")] if args.tuple else []
        except ValueError:
            raise UsageError(f"bad tuple {args.tuple!r}") from None
        if len(values) != len(xs) or any(not 0 <= v < n for v in values):
            raise UsageError(f"tuple must give {len(xs)} vertex ids for {', '.join(xs) or 'no variables'}")
        tuples = [tuple(values)]
    else:
        if n ** len(xs) > args.limit:
            raise UsageError(f"{n ** len(xs)} tuples exceed --limit {args.limit}; pass --tuple")
        tuples = list(itertools.product(range(n), repeat=len(xs)))
    rows = []
    if n == 0:
        rows = [{"tuple": list(t), "count": 0} for t in tuples]
    else:
        s, f = functional_setup(g, body)
        search_xs = xs or ("u0",)
        s, _, table = exact_weights(s, f, y, search_xs)
        arr = np.array([t if xs else (0,) for t in tuples], dtype=np.int64).reshape(-1, len(search_xs))
        totals = table.total(s, arr) if len(arr) else []
        rows = [{"tuple": list(t), "count": int(c)} for t, c in zip(tuples, totals)]
    record = {"counted": y, "variables": list(xs), "rows": rows}
    human = "\n".join(f"{' '.join(map(str, r['tuple'])) or '()'}\t{r['count']}" for r in rows)
    _emit(args, record, human)
    return 0


def cmd_optimize(args) -> int:
    g = _read_graph(args.graph)
    body, y, xs = _body_and_vars(args)
    try:
        result = optimize(g, body, args.mode, y, xs, prune=not args.no_prune)
    except SparseCountError as exc:
        raise _Failure(str(exc)) from None
    _emit(args, result.record(), f"tuple {' '.join(map(str, result.tuple)) or '()'}\nvalue {result.value}")
    return 0


def cmd_pds(args) -> int:
    g = _read_graph(args.graph)
    try:
        result = partial_dominating_set(g, args.k)
    except SparseCountError as exc:
        raise _Failure(str(exc)) from None
    if args.threshold is None:
        _emit(args, result.record(), f"tuple {' '.join(map(str, result.tuple))}\nvalue {result.value}")
    else:
        ok = result.value > args.threshold
        record = {"k": args.k, "threshold": args.threshold, "answer": ok,
                  "tuple": list(result.tuple), "value": result.value}
        _emit(args, record, "yes" if ok else "no")
    return 0


def cmd_oracle(args) -> int:
    g = _read_graph(args.graph)
    f = parse_query(_read_query(args))
    if free_vars(f):
        raise UsageError(f"not a sentence; free variables {sorted(free_vars(f))}")
    if args.action == "eval":
        truth = evaluate_formula(f, g, {})
        _emit(args, {"answer": int(truth)}, str(int(truth)))
        return 0
    lam = 1 + args.epsilon
    try:
        found = instability_witness(f, g, lam, cap=args.oracle_cap)
    except SparseCountError as exc:
        raise _Failure(str(exc)) from None
    record = {"lambda": str(lam), "unstable": found is not None,
              "satisfied": to_text(found[0]) if found else None,
              "unsatisfied": to_text(found[1]) if found else None}
    human = "stable" if found is None else f"unstable\n+ {record['satisfied']}\n- {record['unsatisfied']}"
    _emit(args, record, human)
    return 0


def cmd_augment(args) -> int:
    g = _read_graph(args.graph)
    s = orient(g)
    record = {"vertices": g.vertex_count, "edges": len(g.edges), "rounds": []}
    record["indegree"] = s.indegree()
    for r in range(args.rounds):
        s = augment(s)
        prov = s.signature.provenance
        record["rounds"].append({
            "round": r + 1,
            "functions": len(s.signature.function_symbols),
            "transitive": sum(1 for v in prov.values() if v == TRANSITIVE),
            "fraternal": sum(1 for v in prov.values() if v == FRATERNAL),
            "indegree": s.indegree(),
        })
    human = [f"vertices {record['vertices']} edges {record['edges']} indegree {record['indegree']}"]
    for r in record["rounds"]:
        human.append(f"round {r['round']}: functions {r['functions']} transitive {r['transitive']} "
                     f"fraternal {r['fraternal']} indegree {r['indegree']}")
    _emit(args, record, "\n".join(human))
    return 0


def cmd_bench(args) -> int:
    f = parse_query(args.query)
    if free_vars(f):
        raise UsageError("bench queries must be sentences")
    sizes = [int(x) for x in args.sizes.split(",") if x.strip()] if args.sizes else []
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["family", "n", "m", "wall_time_ms", "answer", "max_indegree", "predicates_added"])
    for n in sizes:
        g = family(args.family, n, args.seed)
        times = []
        result = None
        for _ in range(args.repetitions):
            start = time.perf_counter()
            result = check_sentence(g, f, args.epsilon)
            times.append((time.perf_counter() - start) * 1000)
        rounds = result.rounds
        indegree = max((r["indegree"] for r in rounds), default=orient(g).indegree() if n else 0)
        added = sum(r["new_predicates"] for r in rounds)
        answer = "unknown" if result.answer is None else str(result.answer)
        writer.writerow([args.family, n, len(g.edges), f"{statistics.median(times):.1f}", answer,
                         indegree, added])
        sys.stdout.flush()
    return 0


class _Failure(Exception):
    pass


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "json"), default="human")
    common.add_argument("--epsilon", type=_rational, default=Fraction(1, 2),
                        help="accuracy, a positive rational such as 0.1 or 1/10")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--oracle-cap", type=_positive_int, default=100_000,
                        help="largest perturbation grid the oracle will enumerate")

    def query_args(p):
        p.add_argument("query", nargs="?", help="inline query text")
        p.add_argument("-f", "--query-file", help="read the query from a file")

    parser = argparse.ArgumentParser(prog="sparsecount",
                                     description="Counting queries on sparse labeled graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="three-valued model check of a sentence")
    p.add_argument("graph")
    query_args(p)
    p.set_defaults(run=cmd_check)

    for name, helptext in (("count", "exact values of #y body for tuples"),
                           ("optimize", "tuple optimising #y body")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("graph")
        query_args(p)
        p.add_argument("--count-var", default="y", help="the counted variable (default y)")
        if name == "count":
            p.add_argument("--tuple", help="comma-separated vertex ids, in sorted variable order")
            p.add_argument("--limit", type=_positive_int, default=100_000,
                           help="maximum number of tuples listed without --tuple")
            p.set_defaults(run=cmd_count)
        else:
            p.add_argument("--mode", choices=("max", "min"), default="max")
            p.add_argument("--no-prune", action="store_true", help="disable bound pruning")
            p.set_defaults(run=cmd_optimize)

    p = sub.add_parser("pds", parents=[common], help="partial dominating set")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--threshold", type=int, help="decide whether more than this many are dominated")
    p.set_defaults(run=cmd_pds)

    p = sub.add_parser("oracle", parents=[common], help="brute-force evaluation and instability witnesses")
    p.add_argument("action", choices=("eval", "witness"))
    p.add_argument("graph")
    query_args(p)
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("augment", parents=[common], help="augmentation statistics")
    p.add_argument("graph")
    p.add_argument("--rounds", type=int, default=1)
    p.set_defaults(run=cmd_augment)

    p = sub.add_parser("bench", parents=[common], help="timing runs on generated graph families")
    p.add_argument("--family", choices=FAMILIES, default="grid")
    p.add_argument("--sizes", default="", help="comma-separated vertex counts")
    p.add_argument("--query", default=DEFAULT_BENCH_QUERY)
    p.add_argument("--repetitions", type=_positive_int, default=1)
    p.set_defaults(run=cmd_bench)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("SPARSECOUNT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        return args.run(args)
    except (UsageError, GraphFormatError, QuerySyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (_Failure, SparseCountError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
