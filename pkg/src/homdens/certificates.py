"""Positivity evidence for quantum graphs.

Four kinds: sum-of-squares certificates (a witness list of labeled
quantum graphs whose squares sum to the target after unlabeling), formal
proofs in the Cauchy-Schwarz calculus, finite moment matrices with an
exact positive-semidefiniteness test, and refutation search over small
and random weighted targets.

Everything is decided over the rationals; nothing here floats.
"""

from __future__ import annotations

import random
import re
from fractions import Fraction
from math import lcm

from .algebra import (
    Atom,
    Const,
    EXPAND_BUDGET,
    Product,
    QExpr,
    QuantumGraph,
    Sum,
    Unlabel,
    as_quantum,
    expand,
    format_qexpr,
    parse_qexpr,
    parse_quantum,
    product,
    unlabel,
)
from .density import WeightedGraph, t_quantum
from .errors import FormatError
from .graphs import Graph, enumerate_graphs, independent_blowup, parse_plg

PROOF_RULES = ("A1", "A2", "R1", "R2", "R3")


def _as_normal(x, budget=EXPAND_BUDGET):
    """Normal form of a QuantumGraph, QExpr, or PLG-like value."""
    if isinstance(x, QExpr):
        return expand(x, budget)
    return as_quantum(x)


# ---------------------------------------------------------------------------
# Sum-of-squares certificates


def verify_sos(target, cert, budget=EXPAND_BUDGET):
    """Does the unlabeled sum of the squares of `cert` equal `target`?

    True is sound evidence of positivity: each square has nonnegative
    densities, and unlabeling preserves that.  False only means this
    particular witness list fails.
    """
    gs = list(cert)
    if not gs:
        raise ValueError("a certificate needs at least one quantum graph")
    total = QuantumGraph.zero()
    for g in gs:
        qg = _as_normal(g, budget)
        total = total + unlabel(product(qg, qg), ())
    return total == _as_normal(target, budget)


def format_sos_certificate(cert):
    lines = ["sos:"]
    for g in cert:
        expr = g if isinstance(g, QExpr) else _quantum_to_qexpr(as_quantum(g))
        lines.append("g: " + format_qexpr(expr))
    return "\n".join(lines) + "\n"


def parse_sos_certificate(text):
    header_seen = False
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if not header_seen:
            if body != "sos:":
                raise FormatError("certificate must start with 'sos:'", line=lineno)
            header_seen = True
            continue
        if not body.startswith("g:"):
            raise FormatError("expected 'g: <expression>'", line=lineno)
        try:
            out.append(parse_qexpr(body[2:].strip()))
        except FormatError as exc:
            raise FormatError(str(exc), line=lineno) from None
    if not header_seen:
        raise FormatError("certificate must start with 'sos:'")
    if not out:
        raise FormatError("certificate lists no quantum graphs")
    return out


def _quantum_to_qexpr(qg):
    parts = []
    for plg, coeff in qg.sorted_terms():
        atom = Atom(plg)
        parts.append(atom if coeff == 1 else Product([Const(coeff), atom]))
    if not parts:
        return Const(Fraction(0))
    if len(parts) == 1:
        return parts[0]
    return Sum(parts)


# ---------------------------------------------------------------------------
# The Cauchy-Schwarz calculus


def _as_expr(f):
    if isinstance(f, QExpr):
        return f
    if isinstance(f, QuantumGraph):
        return _quantum_to_qexpr(f)
    return Atom(f)


def cs_instance(f1, f2, T):
    """The Cauchy-Schwarz expression [f1^2]_T [f2^2]_T - [f1 f2]_T^2.

    Nonnegative on every target for any T: averaging over the forgotten
    roots is a conditional expectation, and this is its Cauchy-Schwarz
    inequality.  T must only use labels that appear in f1 or f2.
    """
    f1, f2 = _as_expr(f1), _as_expr(f2)
    keep = frozenset(int(t) for t in T)
    known = f1.label_set() | f2.label_set()
    stray = keep - known
    if stray:
        raise ValueError(f"labels {sorted(stray)} appear in neither factor")
    sq1 = Unlabel(keep, Product([f1, f1]))
    sq2 = Unlabel(keep, Product([f2, f2]))
    cross = Unlabel(keep, Product([f1, f2]))
    return Sum([Product([sq1, sq2]), Product([Const(Fraction(-1)), cross, cross])])


class ProofLine:
    """One derivation step: a statement `f >= 0` plus its justification.

    rule A1 args (f,): statement must be f^2.
    rule A2 args (f1, f2, T): statement must be the Cauchy-Schwarz instance.
    rule R1 args (i, j, alpha, beta): statement is alpha*line_i + beta*line_j.
    rule R2 args (i, j): statement is line_i * line_j.
    rule R3 args (i, T): statement is line_i unlabeled down to T.
    """

    __slots__ = ("statement", "rule", "args")

    def __init__(self, statement, rule, args):
        if rule not in PROOF_RULES:
            raise ValueError(f"unknown rule {rule!r}")
        object.__setattr__(self, "statement", statement)
        object.__setattr__(self, "rule", rule)
        object.__setattr__(self, "args", tuple(args))

    def __setattr__(self, name, value):
        raise AttributeError("ProofLine is immutable")

    def __repr__(self):
        return f"ProofLine({self.rule}, {self.args!r})"


def _line_ref(value, upto):
    i = int(value)
    if not 1 <= i < upto:
        raise ValueError(f"line {upto} references line {i}, which is not earlier")
    return i


def check_cs_proof(proof, claimed, budget=EXPAND_BUDGET):
    """Validate a derivation line by line; True iff every conclusion is the
    exact normal form demanded by its rule and the last line proves
    `claimed`.  Reference errors raise; rule violations just reject.
    """
    lines = list(proof)
    if not lines:
        raise ValueError("empty proof")
    proved = []
    for number, line in enumerate(lines, start=1):
        stated = _as_normal(line.statement, budget)
        rule, args = line.rule, line.args
        if rule == "A1":
            (f,) = args
            qf = _as_normal(f, budget)
            expected = product(qf, qf)
        elif rule == "A2":
            f1, f2, T = args
            expected = expand(cs_instance(f1, f2, T), budget)
        elif rule == "R1":
            i, j, alpha, beta = args
            alpha, beta = Fraction(alpha), Fraction(beta)
            if alpha < 0 or beta < 0:
                return False
            i, j = _line_ref(i, number), _line_ref(j, number)
            expected = alpha * proved[i - 1] + beta * proved[j - 1]
        elif rule == "R2":
            i, j = (_line_ref(a, number) for a in args)
            expected = product(proved[i - 1], proved[j - 1])
        else:
            i, T = args
            i = _line_ref(i, number)
            expected = unlabel(proved[i - 1], frozenset(int(t) for t in T))
        if stated != expected:
            return False
        proved.append(stated)
    return proved[-1] == _as_normal(claimed, budget)


# -- proof file format -------------------------------------------------------
# n: <statement> ; by A1(<f>) | A2(<f1>,<f2>,T=...) | R1(i,j,a,b) | R2(i,j)
#                 | R3(i,T=...)
# Statements and rule operands are inline s-expressions or @file references.


def _default_resolver(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _parse_operand(text, resolve, lineno):
    text = text.strip()
    if not text:
        raise FormatError("empty operand", line=lineno)
    if text.startswith("@"):
        try:
            text = resolve(text[1:]).strip()
        except OSError as exc:
            raise FormatError(f"cannot read {text[1:]!r}: {exc}", line=lineno) from None
    try:
        if text.startswith("("):
            return parse_qexpr(text)
        if text.startswith("plg"):
            return as_quantum(parse_plg(text))
        return parse_quantum(text)
    except FormatError as exc:
        if exc.line is None:
            raise FormatError(str(exc), line=lineno) from None
        raise


def _split_top_level(text):
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def _parse_labels(parts, lineno):
    head = parts[0].strip()
    if not head.startswith("T="):
        raise FormatError("expected T=<labels>", line=lineno)
    items = [head[2:].strip()] + [p.strip() for p in parts[1:]]
    labels = []
    for item in items:
        if not item:
            continue
        try:
            labels.append(int(item))
        except ValueError:
            raise FormatError(f"bad label {item!r}", line=lineno) from None
    return frozenset(labels)


def _parse_justification(text, resolve, lineno):
    text = text.strip()
    if "(" not in text or not text.endswith(")"):
        raise FormatError("expected <rule>(<operands>)", line=lineno)
    rule, _, inner = text.partition("(")
    rule = rule.strip()
    if rule not in PROOF_RULES:
        raise FormatError(f"unknown rule {rule!r}", line=lineno)
    parts = _split_top_level(inner[:-1])
    if rule == "A1":
        if len(parts) != 1:
            raise FormatError("A1 takes one operand", line=lineno)
        return rule, (_parse_operand(parts[0], resolve, lineno),)
    if rule == "A2":
        if len(parts) < 3:
            raise FormatError("A2 takes two operands and T=", line=lineno)
        f1 = _parse_operand(parts[0], resolve, lineno)
        f2 = _parse_operand(parts[1], resolve, lineno)
        return rule, (f1, f2, _parse_labels(parts[2:], lineno))
    if rule == "R1":
        if len(parts) != 4:
            raise FormatError("R1 takes i,j,alpha,beta", line=lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            alpha, beta = Fraction(parts[2].strip()), Fraction(parts[3].strip())
        except (ValueError, ZeroDivisionError):
            raise FormatError("bad R1 arguments", line=lineno) from None
        return rule, (i, j, alpha, beta)
    if rule == "R2":
        if len(parts) != 2:
            raise FormatError("R2 takes i,j", line=lineno)
        try:
            return rule, (int(parts[0]), int(parts[1]))
        except ValueError:
            raise FormatError("bad R2 arguments", line=lineno) from None
    if len(parts) < 2:
        raise FormatError("R3 takes i and T=", line=lineno)
    try:
        i = int(parts[0])
    except ValueError:
        raise FormatError("bad R3 line reference", line=lineno) from None
    return rule, (i, _parse_labels(parts[1:], lineno))


# Graph records use ';' and ':' internally, so the split points are the
# first ':' (numbers precede any record) and the last '; by <rule>('.
_BY_RULE = re.compile(r";\s*by\s+(?=(?:A1|A2|R1|R2|R3)\s*\()")


def parse_cs_proof(text, resolve=_default_resolver):
    """Parse a numbered proof file; @refs are loaded through `resolve`."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        number, sep, rest = body.partition(":")
        if not sep or not number.strip().isdigit():
            raise FormatError("expected '<number>: ...'", line=lineno)
        if int(number) != len(lines) + 1:
            raise FormatError(
                f"line numbered {number.strip()}, expected {len(lines) + 1}",
                line=lineno,
            )
        splits = list(_BY_RULE.finditer(rest))
        if not splits:
            raise FormatError("missing '; by <rule>(...)'", line=lineno)
        statement = _parse_operand(rest[: splits[-1].start()], resolve, lineno)
        rule, args = _parse_justification(rest[splits[-1].end():], resolve, lineno)
        lines.append(ProofLine(statement, rule, args))
    if not lines:
        raise FormatError("empty proof")
    return lines


# ---------------------------------------------------------------------------
# Moment matrices


class MomentMatrix:
    """Densities of pairwise products of a basis, at a fixed target."""

    __slots__ = ("basis", "graph", "entries")

    def __init__(self, basis, graph, entries):
        object.__setattr__(self, "basis", tuple(basis))
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "entries", tuple(tuple(row) for row in entries))

    def __setattr__(self, name, value):
        raise AttributeError("MomentMatrix is immutable")

    def __repr__(self):
        return f"MomentMatrix({len(self.basis)}x{len(self.basis)} at {self.graph!r})"


def moment_matrix(g, basis):
    """Entry (i, j) is the density of the unlabeled gluing of basis[i] and
    basis[j] in g."""
    qs = [QuantumGraph.of(b) for b in basis]
    k = len(qs)
    entries = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            value = t_quantum(unlabel(product(qs[i], qs[j]), ()), g)
            entries[i][j] = value
            entries[j][i] = value
    return MomentMatrix(basis, g, entries)


def is_psd(matrix):
    """Exact positive-semidefiniteness of a symmetric rational matrix.

    Symmetric elimination over Fractions: a negative pivot disproves, a
    zero pivot must head an all-zero row, and surviving pivots certify a
    LDL^T factorization with nonnegative diagonal.
    """
    entries = matrix.entries if isinstance(matrix, MomentMatrix) else matrix
    a = [[Fraction(x) for x in row] for row in entries]
    n = len(a)
    for row in a:
        if len(row) != n:
            raise ValueError("matrix must be square")
    for i in range(n):
        for j in range(i + 1, n):
            if a[i][j] != a[j][i]:
                raise ValueError("matrix must be symmetric")
    for i in range(n):
        pivot = a[i][i]
        if pivot < 0:
            return False
        if pivot == 0:
            if any(a[i][j] != 0 for j in range(i + 1, n)):
                return False
            continue
        for r in range(i + 1, n):
            if a[r][i] == 0:
                continue
            factor = a[r][i] / pivot
            for c in range(i, n):
                a[r][c] -= factor * a[i][c]
    return True


# ---------------------------------------------------------------------------
# Refutation search


def _random_graph(rng, n):
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5
    ]
    return Graph(n, edges)


def _random_distribution(rng, n):
    weights = [rng.randint(0, 6) for _ in range(n)]
    if not any(weights):
        weights[rng.randrange(n)] = 1
    total = sum(weights)
    return [Fraction(w, total) for w in weights]


def refute(target, max_n=5, samples=200, seed=0):
    """Search for a target graph where the quantum graph evaluates negative.

    Scans every isomorphism class up to max_n vertices in canonical order,
    then `samples` seeded random weighted graphs.  Returns the first
    witness (a Graph, or a WeightedGraph from the random phase) or None.
    The result is deterministic in (max_n, samples, seed).
    """
    target = _refutation_target(target)
    return _scan_exhaustive(target, max_n) or _scan_random(target, max_n, samples, seed)


def _refutation_target(target):
    if not isinstance(target, (QExpr, QuantumGraph)):
        target = as_quantum(target)
    labels = target.label_set()
    if labels:
        raise ValueError(f"target carries labels {sorted(labels)}, expected none")
    return target


def _scan_exhaustive(target, max_n):
    for n in range(1, max_n + 1):
        for g in enumerate_graphs(n):
            if t_quantum(target, g) < 0:
                return g
    return None


def _scan_random(target, max_n, samples, seed):
    rng = random.Random(seed)
    for _ in range(samples):
        g = _random_graph(rng, rng.randint(1, max_n))
        G = WeightedGraph(g, _random_distribution(rng, g.n))
        if t_quantum(target, G) < 0:
            return G
    return None


def integer_witness(G):
    """An unweighted graph with exactly the weighted witness's densities.

    Zero-weight vertices are dropped; each remaining vertex becomes an
    independent set of cleared-numerator many copies, which reproduces the
    vertex distribution exactly.
    """
    support = [v for v in range(G.graph.n) if G.y[v] > 0]
    sub = G.graph.induced(support)
    denom = lcm(*(G.y[v].denominator for v in support))
    counts = [int(G.y[v] * denom) for v in support]
    return independent_blowup(sub, counts)
