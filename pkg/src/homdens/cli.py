"""Command-line surface.

Every command reads and writes the plain-text formats of the library
(`plg` records, quantum-graph term lists, s-expressions, polynomial and
proof files) and prints machine-readable `key=value` lines with exact
rationals.  Exit codes: 0 for verified/none-found, 1 for rejected or
witness-found, 2 for malformed input or exceeded caps.

Identical invocations produce byte-identical output.  Setting
HOMDENS_CACHE_DIR caches small-graph enumerations between runs.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys

from .algebra import (
    EXPAND_BUDGET,
    as_quantum,
    format_qexpr,
    format_quantum,
    parse_qexpr,
    parse_quantum,
)
from .certificates import (
    _refutation_target,
    _scan_random,
    check_cs_proof,
    integer_witness,
    is_psd,
    moment_matrix,
    parse_cs_proof,
    parse_sos_certificate,
    refute,
    verify_sos,
)
from .density import (
    WeightedGraph,
    format_weighted_graph,
    parse_weighted_graph,
    t_quantum,
)
from .errors import FormatError
from .graphs import (
    PartiallyLabeledGraph,
    enumerate_graphs,
    format_plg,
    parse_plg,
    stringent_graph,
)
from .polynomials import parse_poly
from .reductions import build_counterexample, build_instance, witness_graph


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit(key, value):
    print(f"{key}={value}")


def _load_expression(text):
    """Sniff a quantum-graph payload: s-expression, plg record, or term list."""
    stripped = text.strip()
    if not stripped:
        raise FormatError("empty input")
    if stripped.startswith("("):
        return parse_qexpr(stripped)
    if stripped.startswith("plg"):
        return as_quantum(parse_plg(stripped))
    return parse_quantum(text)


def _load_target(text):
    stripped = text.strip()
    if "weights=" in stripped:
        return parse_weighted_graph(stripped)
    plg = parse_plg(stripped)
    if plg.labels:
        raise FormatError("target graphs carry no labels")
    return plg.graph


def _parse_roots(text):
    phi = {}
    if not text:
        return phi
    for item in text.split(","):
        lab, sep, vertex = item.partition(":")
        if not sep:
            raise FormatError(f"bad root {item!r}, expected label:vertex")
        try:
            phi[int(lab)] = int(vertex) - 1
        except ValueError:
            raise FormatError(f"bad root {item!r}") from None
    return phi


def _warn_budget(args):
    if args.budget != EXPAND_BUDGET:
        print(
            f"warning: expansion budget overridden to {args.budget}",
            file=sys.stderr,
        )


# ---------------------------------------------------------------------------
# Commands


def cmd_density(args):
    pattern = _load_expression(_read(args.infile))
    target = _load_target(_read(args.target))
    value = t_quantum(pattern, target, _parse_roots(args.root))
    _emit("t", value)
    return 0


def cmd_stringent(args):
    g = stringent_graph(args.k)
    record = format_plg(PartiallyLabeledGraph(g), canonicalize=False)
    _emit("n", g.n)
    _emit("edges", len(g.edges))
    if args.out:
        _write(args.out, record + "\n")
        _emit("out", args.out)
    else:
        _emit("graph", record)
    return 0


def cmd_counterexample(args):
    x = build_counterexample(args.k)
    _emit("terms", len(x.terms))
    if args.out:
        _write(args.out, format_quantum(x))
        _emit("out", args.out)
    else:
        sys.stdout.write(format_quantum(x))
    return 0


def cmd_reduce(args):
    p = parse_poly(_read(args.poly))
    instance = build_instance(p, k=args.k)
    text = format_qexpr(instance) + "\n"
    if args.out:
        _write(args.out, text)
        _emit("out", args.out)
    else:
        sys.stdout.write(text)
    return 0


def cmd_witness(args):
    p = parse_poly(_read(args.poly))
    try:
        counts = tuple(int(c) for c in args.sizes.split(","))
    except ValueError:
        raise FormatError(f"bad sizes {args.sizes!r}") from None
    g = witness_graph(p, counts)
    record = format_plg(PartiallyLabeledGraph(g), canonicalize=False)
    _emit("n", g.n)
    if args.out:
        _write(args.out, record + "\n")
        _emit("out", args.out)
    else:
        _emit("graph", record)
    return 0


def cmd_eval(args):
    f = _load_expression(_read(args.infile))
    target = _load_target(_read(args.target))
    value = t_quantum(f, target, _parse_roots(args.root))
    _emit("value", value)
    return 1 if value < 0 else 0


def cmd_verify_sos(args):
    _warn_budget(args)
    target = _load_expression(_read(args.target))
    cert = parse_sos_certificate(_read(args.cert))
    ok = verify_sos(target, cert, budget=args.budget)
    _emit("verified", "true" if ok else "false")
    return 0 if ok else 1


def cmd_check_proof(args):
    _warn_budget(args)
    base = os.path.dirname(os.path.abspath(args.infile))

    def resolve(ref):
        return _read(os.path.join(base, ref))

    proof = parse_cs_proof(_read(args.infile), resolve=resolve)
    claimed = _load_expression(_read(args.claim))
    ok = check_cs_proof(proof, claimed, budget=args.budget)
    _emit("lines", len(proof))
    _emit("accepted", "true" if ok else "false")
    return 0 if ok else 1


def cmd_refute(args):
    target_text = _read(args.infile)
    target = _refutation_target(_load_expression(target_text))
    if args.jobs > 1:
        witness = _parallel_exhaustive(target_text, target, args.max_n, args.jobs)
        if witness is None:
            witness = _scan_random(target, args.max_n, args.samples, args.seed)
    else:
        witness = refute(target, max_n=args.max_n, samples=args.samples, seed=args.seed)
    if witness is None:
        _emit("witness", "none")
        return 0
    if isinstance(witness, WeightedGraph):
        _emit("witness", format_weighted_graph(witness))
        _emit("value", t_quantum(target, witness))
        blown = integer_witness(witness)
        _emit("integer_witness", format_plg(PartiallyLabeledGraph(blown), canonicalize=False))
        _emit("integer_value", t_quantum(target, blown))
    else:
        _emit("witness", format_plg(PartiallyLabeledGraph(witness), canonicalize=False))
        _emit("value", t_quantum(target, witness))
    return 1


def cmd_moment_matrix(args):
    target = _load_target(_read(args.target))
    basis = []
    for lineno, raw in enumerate(_read(args.basis).splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            basis.append(parse_plg(body, line=lineno))
    if not basis:
        raise FormatError("basis file lists no patterns")
    M = moment_matrix(target, basis)
    _emit("size", len(basis))
    for i, row in enumerate(M.entries, start=1):
        _emit(f"row{i}", ",".join(str(x) for x in row))
    ok = is_psd(M)
    _emit("psd", "true" if ok else "false")
    return 0 if ok else 1


def cmd_enumerate(args):
    graphs = enumerate_graphs(args.n)
    _emit("count", len(graphs))
    records = [format_plg(PartiallyLabeledGraph(g)) for g in graphs]
    if args.out:
        _write(args.out, "".join(r + "\n" for r in records))
        _emit("out", args.out)
    else:
        for r in records:
            _emit("graph", r)
    return 0


# ---------------------------------------------------------------------------
# Parallel exhaustive refutation.  Workers receive candidate records as
# text and re-parse the target once each; the lowest negative index wins,
# so the winner is independent of the worker count.

_WORKER_TARGET = None


def _refute_init(target_text):
    global _WORKER_TARGET
    _WORKER_TARGET = _load_expression(target_text)


def _refute_probe(job):
    index, record = job
    g = parse_plg(record).graph
    return index if t_quantum(_WORKER_TARGET, g) < 0 else None


def _parallel_exhaustive(target_text, target, max_n, jobs):
    for n in range(1, max_n + 1):
        candidates = enumerate_graphs(n)
        jobs_for_n = [
            (i, format_plg(PartiallyLabeledGraph(g), canonicalize=False))
            for i, g in enumerate(candidates)
        ]
        with multiprocessing.Pool(
            jobs, initializer=_refute_init, initargs=(target_text,)
        ) as pool:
            chunk = max(1, len(jobs_for_n) // (jobs * 4))
            hits = [i for i in pool.map(_refute_probe, jobs_for_n, chunk) if i is not None]
        if hits:
            return candidates[min(hits)]
    return None


# ---------------------------------------------------------------------------
# Argument wiring


def _parser():
    top = argparse.ArgumentParser(
        prog="homdens",
        description="Exact homomorphism-density computations on quantum graphs.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = command("density", cmd_density, "rooted density of a pattern in a target graph")
    p.add_argument("--in", dest="infile", required=True, help="pattern file")
    p.add_argument("--target", required=True, help="target graph file")
    p.add_argument("--root", default="", help="root map label:vertex[,...] (1-based)")

    p = command("stringent", cmd_stringent, "construct the stringent graph on k vertices")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")

    p = command("counterexample", cmd_counterexample, "positive but not sum-of-squares quantum graph")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--out")

    p = command("reduce", cmd_reduce, "map a polynomial to its decision-problem instance")
    p.add_argument("--poly", required=True, help="polynomial file")
    p.add_argument("--k", type=int, default=6, help="number of variables / labels")
    p.add_argument("--out")

    p = command("witness", cmd_witness, "clique blow-up witnessing grid negativity")
    p.add_argument("--poly", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated clique sizes")
    p.add_argument("--out")

    p = command("eval", cmd_eval, "evaluate a quantum expression on a target graph")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--root", default="")

    p = command("verify-sos", cmd_verify_sos, "check a sum-of-squares certificate")
    p.add_argument("--target", required=True)
    p.add_argument("--cert", required=True)
    p.add_argument("--budget", type=int, default=EXPAND_BUDGET)

    p = command("check-proof", cmd_check_proof, "check a Cauchy-Schwarz calculus proof")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--claim", required=True, help="claimed nonnegative quantum graph")
    p.add_argument("--budget", type=int, default=EXPAND_BUDGET)

    p = command("refute", cmd_refute, "search small and weighted graphs for a negative value")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = command("moment-matrix", cmd_moment_matrix, "pairwise product densities of a basis")
    p.add_argument("--target", required=True)
    p.add_argument("--basis", required=True, help="file with one plg record per line")

    p = command("enumerate", cmd_enumerate, "canonical graphs on n vertices")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")

    return top


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
