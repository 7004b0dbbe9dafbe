"""The quantum-graph algebra.

A quantum graph is a formal rational linear combination of partially
labeled graphs.  Multiplication glues two PLGs: take the disjoint union,
identify vertices carrying the same label, and keep one copy of any doubled
edge.  Working modulo the ideal spanned by differences F - H, where F adds
a (possibly labeled) isolated vertex to H, every combination has a normal
form: strip all isolated vertices from every term, canonicalize, merge.
Two combinations are equal in the quotient exactly when their normal forms
coincide, so `QuantumGraph` stores the normal form and nothing else.

Large expressions that must never be expanded (images of big polynomials
under graph-algebra homomorphisms) are kept as `QExpr` trees instead, built
from Const/Atom/IndAtom/Sum/Product/Unlabel nodes plus `PolyImage`, which
applies a polynomial to named generator subexpressions.  `expand` turns a
tree into a QuantumGraph when it fits in a term budget; the density module
evaluates trees directly without expansion.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from .errors import BudgetExceeded, CapExceeded, FormatError
from .graphs import (
    PLG,
    Graph,
    PartiallyLabeledGraph,
    canonical_form,
    format_plg,
    parse_plg,
)
from .polynomials import Polynomial

IND_CAP = 20
EXPAND_BUDGET = 200_000

EMPTY_PLG = PLG(Graph(0))


def as_plg(x):
    if isinstance(x, PartiallyLabeledGraph):
        return x
    if isinstance(x, Graph):
        return PLG(x)
    raise TypeError(f"expected a graph or PLG, got {type(x).__name__}")


def strip_isolated(plg):
    """Remove every isolated vertex, labeled or not."""
    g = plg.graph
    keep = [v for v in range(g.n) if g.adj[v]]
    if len(keep) == g.n:
        return plg
    index = {v: i for i, v in enumerate(keep)}
    labels = [(lab, index[v]) for lab, v in plg.labels if v in index]
    return PLG(g.induced(keep), labels)


def glue(a, b):
    """Glue two PLGs: disjoint union, identify equal labels, drop doubled edges."""
    a, b = as_plg(a), as_plg(b)
    avert = a.label_map()
    bmap = {}
    fresh = a.graph.n
    b_label_of = {v: lab for lab, v in b.labels}
    for v in range(b.graph.n):
        lab = b_label_of.get(v)
        if lab is not None and lab in avert:
            bmap[v] = avert[lab]
        else:
            bmap[v] = fresh
            fresh += 1
    edges = set(a.graph.edges)
    for u, v in b.graph.edges:
        x, y = bmap[u], bmap[v]
        edges.add((x, y) if x < y else (y, x))
    labels = dict(a.labels)
    for lab, v in b.labels:
        labels[lab] = bmap[v]
    return PLG(Graph(fresh, edges), labels)


class QuantumGraph:
    """A rational combination of PLGs, stored in normal form.

    Keys are canonical isolated-vertex-free PLGs; the empty graph is the
    unit of the unlabeled subalgebra.  The empty map is zero.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        if isinstance(terms, dict):
            terms = terms.items()
        acc = {}
        for plg, coeff in terms:
            coeff = Fraction(coeff)
            if not coeff:
                continue
            key = strip_isolated(as_plg(plg)).canonical()
            acc[key] = acc.get(key, Fraction(0)) + coeff
        object.__setattr__(self, "terms", {k: c for k, c in acc.items() if c})

    def __setattr__(self, name, value):
        raise AttributeError("QuantumGraph is immutable")

    @staticmethod
    def of(plg, coeff=1):
        return QuantumGraph([(as_plg(plg), coeff)])

    @staticmethod
    def zero():
        return QuantumGraph()

    @staticmethod
    def unit():
        return QuantumGraph.of(EMPTY_PLG)

    def is_zero(self):
        return not self.terms

    def label_set(self):
        out = set()
        for plg in self.terms:
            out |= plg.label_set()
        return frozenset(out)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0].sort_key())

    def coefficient(self, plg):
        key = strip_isolated(as_plg(plg)).canonical()
        return self.terms.get(key, Fraction(0))

    def __add__(self, other):
        other = as_quantum(other)
        merged = dict(self.terms)
        for plg, coeff in other.terms.items():
            merged[plg] = merged.get(plg, Fraction(0)) + coeff
        return QuantumGraph(merged)

    __radd__ = __add__

    def __neg__(self):
        return QuantumGraph({p: -c for p, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-as_quantum(other))

    def __rsub__(self, other):
        return as_quantum(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuantumGraph({p: c * other for p, c in self.terms.items()})
        return product(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QuantumGraph.unit() * other
        elif not isinstance(other, QuantumGraph):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "QuantumGraph(0)"
        bits = [f"{c} * {format_plg(p, canonicalize=False)}" for p, c in self.sorted_terms()]
        return "QuantumGraph(" + " + ".join(bits) + ")"


def as_quantum(x):
    if isinstance(x, QuantumGraph):
        return x
    if isinstance(x, (PartiallyLabeledGraph, Graph)):
        return QuantumGraph.of(as_plg(x))
    if isinstance(x, (int, Fraction)):
        return QuantumGraph.unit() * x
    raise TypeError(f"expected quantum graph material, got {type(x).__name__}")


def product(f, g):
    """Bilinear extension of PLG gluing; commutative and associative."""
    f, g = as_quantum(f), as_quantum(g)
    out = []
    for h1, c1 in f.terms.items():
        for h2, c2 in g.terms.items():
            out.append((glue(h1, h2), c1 * c2))
    return QuantumGraph(out)


def unlabel(f, keep=()):
    """Forget every label outside `keep`; linear in f."""
    keep = frozenset(keep)
    f = as_quantum(f)
    return QuantumGraph(
        [(plg.drop_labels(keep), coeff) for plg, coeff in f.terms.items()]
    )


def normalize(raw):
    """Normal form of a raw (plg, coeff) collection."""
    return QuantumGraph(raw)


def equal_mod_K(f, g):
    """Equality in the quotient algebra: identical normal forms."""
    return as_quantum(f) == as_quantum(g)


def non_edges(plg):
    g = plg.graph
    return [(u, v) for u, v in combinations(range(g.n), 2) if not g.has_edge(u, v)]


def ind(h, cap=IND_CAP):
    """Alternating sum over all supergraphs of h on the same vertex set.

    ind(H) = sum over F >= H of (-1)^{|E(F) - E(H)|} F, labels kept.  The
    number of absent pairs is capped; larger graphs must stay symbolic as
    IndAtom nodes.
    """
    h = as_plg(h)
    missing = non_edges(h)
    if len(missing) > cap:
        raise CapExceeded(f"ind expansion over {len(missing)} absent pairs exceeds cap {cap}")
    base = set(h.graph.edges)
    terms = []
    for bits in range(1 << len(missing)):
        extra = [missing[i] for i in range(len(missing)) if bits >> i & 1]
        g = Graph(h.graph.n, base.union(extra))
        terms.append((PLG(g, h.labels), Fraction(-1) ** len(extra)))
    return QuantumGraph(terms)


def _supergraphs_raw(plg):
    """All supergraphs on the same vertex set, labels kept, no normalization."""
    missing = non_edges(plg)
    base = set(plg.graph.edges)
    for bits in range(1 << len(missing)):
        extra = [missing[i] for i in range(len(missing)) if bits >> i & 1]
        yield PLG(Graph(plg.graph.n, base.union(extra)), plg.labels)


def labeled_core(plg):
    """The induced labeled subgraph, canonicalized, isolated vertices kept."""
    verts = [v for _, v in plg.labels]
    index = {v: i for i, v in enumerate(verts)}
    core = PLG(plg.graph.induced(verts), [(lab, index[v]) for lab, v in plg.labels])
    return canonical_form(core).plg


def _lift(plg, labels):
    """Add isolated labeled vertices so the label set becomes exactly `labels`."""
    have = plg.label_set()
    missing = sorted(set(labels) - have)
    if not missing:
        return plg
    n = plg.graph.n
    g = Graph(n + len(missing), plg.graph.edges)
    lab = list(plg.labels) + [(m, n + i) for i, m in enumerate(missing)]
    return PLG(g, lab)


def rooted_decomposition(f, labels=None, cap=12):
    """Split f by the labeled core of its ind-basis expansion.

    Terms are lifted to the label universe (default 1..max label in f) with
    isolated labeled vertices, rewritten through F = sum of ind(F') over
    supergraphs F', and grouped by the fully labeled induced subgraph of
    F'.  The result maps each core H to the component f_H; summing all
    components returns f in the quotient algebra.

    The rewrite touches 3^m basis elements for a lifted term with m absent
    pairs, so m is capped.
    """
    f = as_quantum(f)
    if labels is None:
        labels = range(1, max((max(p.label_set(), default=0) for p in f.terms), default=0) + 1)
    universe = sorted(labels)
    for plg in f.terms:
        if not plg.label_set() <= set(universe):
            raise ValueError("term labels outside the declared universe")
    groups = {}
    for term, coeff in f.terms.items():
        lifted = _lift(term, universe)
        missing = len(non_edges(lifted))
        if missing > cap:
            raise CapExceeded(
                f"decomposition over {missing} absent pairs exceeds cap {cap}"
            )
        for sup in _supergraphs_raw(lifted):
            core = labeled_core(sup)
            groups.setdefault(core, []).append((sup, coeff))
    out = {}
    for core, pieces in sorted(groups.items(), key=lambda kv: kv[0].sort_key()):
        total = QuantumGraph.zero()
        for sup, coeff in pieces:
            total = total + coeff * ind(sup)
        if not total.is_zero():
            out[core] = total
    return out


# ---------------------------------------------------------------------------
# Structured expressions


class QExpr:
    """Base of the structured expression tree; nodes are immutable."""

    __slots__ = ()

    def label_set(self):
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, _as_qexpr(other)))

    def __mul__(self, other):
        return Product((self, _as_qexpr(other)))

    __radd__ = __add__
    __rmul__ = __mul__


def _as_qexpr(x):
    if isinstance(x, QExpr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(x)
    if isinstance(x, (PartiallyLabeledGraph, Graph)):
        return Atom(as_plg(x))
    raise TypeError(f"cannot lift {type(x).__name__} into an expression")


class Const(QExpr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", Fraction(value))

    def __setattr__(self, name, value):
        raise AttributeError("Const is immutable")

    def label_set(self):
        return frozenset()

    def __eq__(self, other):
        return isinstance(other, Const) and self.value == other.value

    def __hash__(self):
        return hash(("Const", self.value))

    def __repr__(self):
        return f"Const({self.value})"


class Atom(QExpr):
    __slots__ = ("plg",)

    def __init__(self, plg):
        object.__setattr__(self, "plg", as_plg(plg).canonical())

    def __setattr__(self, name, value):
        raise AttributeError("Atom is immutable")

    def label_set(self):
        return self.plg.label_set()

    def __eq__(self, other):
        return isinstance(other, Atom) and self.plg == other.plg

    def __hash__(self):
        return hash(("Atom", self.plg))

    def __repr__(self):
        return f"Atom({format_plg(self.plg, canonicalize=False)!r})"


class IndAtom(QExpr):
    """ind(plg), kept unexpanded."""

    __slots__ = ("plg",)

    def __init__(self, plg):
        object.__setattr__(self, "plg", as_plg(plg).canonical())

    def __setattr__(self, name, value):
        raise AttributeError("IndAtom is immutable")

    def label_set(self):
        return self.plg.label_set()

    def __eq__(self, other):
        return isinstance(other, IndAtom) and self.plg == other.plg

    def __hash__(self):
        return hash(("IndAtom", self.plg))

    def __repr__(self):
        return f"IndAtom({format_plg(self.plg, canonicalize=False)!r})"


class Sum(QExpr):
    __slots__ = ("children",)

    def __init__(self, children):
        object.__setattr__(self, "children", tuple(_as_qexpr(c) for c in children))

    def __setattr__(self, name, value):
        raise AttributeError("Sum is immutable")

    def label_set(self):
        return frozenset().union(*(c.label_set() for c in self.children)) if self.children else frozenset()

    def __eq__(self, other):
        return isinstance(other, Sum) and self.children == other.children

    def __hash__(self):
        return hash(("Sum", self.children))

    def __repr__(self):
        return f"Sum({list(self.children)!r})"


class Product(QExpr):
    __slots__ = ("children",)

    def __init__(self, children):
        object.__setattr__(self, "children", tuple(_as_qexpr(c) for c in children))

    def __setattr__(self, name, value):
        raise AttributeError("Product is immutable")

    def label_set(self):
        return frozenset().union(*(c.label_set() for c in self.children)) if self.children else frozenset()

    def __eq__(self, other):
        return isinstance(other, Product) and self.children == other.children

    def __hash__(self):
        return hash(("Product", self.children))

    def __repr__(self):
        return f"Product({list(self.children)!r})"


class Unlabel(QExpr):
    __slots__ = ("keep", "child")

    def __init__(self, keep, child):
        object.__setattr__(self, "keep", frozenset(int(t) for t in keep))
        object.__setattr__(self, "child", _as_qexpr(child))

    def __setattr__(self, name, value):
        raise AttributeError("Unlabel is immutable")

    def label_set(self):
        return self.child.label_set() & self.keep

    def __eq__(self, other):
        return isinstance(other, Unlabel) and self.keep == other.keep and self.child == other.child

    def __hash__(self):
        return hash(("Unlabel", self.keep, self.child))

    def __repr__(self):
        return f"Unlabel({sorted(self.keep)}, {self.child!r})"


class PolyImage(QExpr):
    """A polynomial applied to named generator subexpressions.

    Represents the image of `poly` under the algebra homomorphism sending
    each variable to its generator, without multiplying anything out.  The
    poly slot needs `vars`, `evaluate(point)` and, for expansion, `terms`
    (or an `as_polynomial()` view).  `origin` is an optional s-expression
    that reconstructs the node, used by the serializer.
    """

    __slots__ = ("generators", "poly", "origin")

    def __init__(self, generators, poly, origin=None):
        if isinstance(generators, dict):
            generators = generators.items()
        gens = tuple(sorted((str(v), _as_qexpr(e)) for v, e in generators))
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "origin", origin)
        missing = set(poly.vars) - {v for v, _ in gens}
        if missing:
            raise ValueError(f"no generator for variables {sorted(missing)}")

    def __setattr__(self, name, value):
        raise AttributeError("PolyImage is immutable")

    def generator_map(self):
        return dict(self.generators)

    def label_set(self):
        sets = [e.label_set() for _, e in self.generators]
        return frozenset().union(*sets) if sets else frozenset()

    def __eq__(self, other):
        return (
            isinstance(other, PolyImage)
            and self.generators == other.generators
            and self.poly == other.poly
        )

    def __hash__(self):
        return hash(("PolyImage", self.generators))

    def __repr__(self):
        names = ", ".join(v for v, _ in self.generators)
        return f"PolyImage([{names}], {self.poly!r})"


def expand(expr, budget=EXPAND_BUDGET):
    """Expand a structured expression into a normal-form QuantumGraph.

    Raises BudgetExceeded when an intermediate combination would hold more
    than `budget` terms, so astronomically large images fail fast instead
    of thrashing.
    """
    expr = _as_qexpr(expr)
    if isinstance(expr, Const):
        return QuantumGraph.unit() * expr.value
    if isinstance(expr, Atom):
        return QuantumGraph.of(expr.plg)
    if isinstance(expr, IndAtom):
        missing = len(non_edges(expr.plg))
        if (1 << missing) > budget:
            raise BudgetExceeded(f"ind expansion needs 2^{missing} terms, budget is {budget}")
        return ind(expr.plg, cap=missing)
    if isinstance(expr, Sum):
        total = QuantumGraph.zero()
        for child in expr.children:
            total = total + expand(child, budget)
            _check_budget(total, budget)
        return total
    if isinstance(expr, Product):
        total = QuantumGraph.unit()
        for child in expr.children:
            total = product(total, expand(child, budget))
            _check_budget(total, budget)
        return total
    if isinstance(expr, Unlabel):
        return unlabel(expand(expr.child, budget), expr.keep)
    if isinstance(expr, PolyImage):
        return _expand_poly_image(expr, budget)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _check_budget(qg, budget):
    if len(qg.terms) > budget:
        raise BudgetExceeded(f"expansion exceeded {budget} terms")


def _expand_poly_image(expr, budget):
    poly = expr.poly
    if not isinstance(poly, Polynomial):
        poly = poly.as_polynomial()
    gens = {v: expand(e, budget) for v, e in expr.generators}
    powers = {}

    def gen_power(var, e):
        if (var, e) not in powers:
            if e == 0:
                powers[var, e] = QuantumGraph.unit()
            else:
                powers[var, e] = product(gen_power(var, e - 1), gens[var])
                _check_budget(powers[var, e], budget)
        return powers[var, e]

    total = QuantumGraph.zero()
    for exps, coeff in poly.terms.items():
        term = QuantumGraph.unit()
        for var, e in zip(poly.vars, exps):
            if e:
                term = product(term, gen_power(var, e))
                _check_budget(term, budget)
        total = total + coeff * term
        _check_budget(total, budget)
    return total


# ---------------------------------------------------------------------------
# Text formats


def format_quantum(f):
    """One `<coefficient> * <plg record>` line per term, canonically sorted."""
    f = as_quantum(f)
    if not f.terms:
        return "# 0\n"
    lines = [
        f"{coeff} * {format_plg(plg, canonicalize=False)}"
        for plg, coeff in f.sorted_terms()
    ]
    return "\n".join(lines) + "\n"


def parse_quantum(text):
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        coeff_text, sep, record = body.partition("*")
        if not sep:
            raise FormatError("expected '<coefficient> * <plg record>'", line=lineno)
        try:
            coeff = Fraction(coeff_text.strip())
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad coefficient {coeff_text.strip()!r}", line=lineno) from None
        terms.append((parse_plg(record.strip(), line=lineno), coeff))
    return QuantumGraph(terms)


# s-expressions: (q 2/3), (g <plg>), (ind <plg>), (sum e...), (prod e...),
# (unlabel (1 2) e).  Extra heads may be registered by other modules.

QEXPR_HEADS = {}


def register_qexpr_head(name, parser):
    QEXPR_HEADS[name] = parser


def format_qexpr(expr):
    expr = _as_qexpr(expr)
    if isinstance(expr, Const):
        return f"(q {expr.value})"
    if isinstance(expr, Atom):
        return f"(g {format_plg(expr.plg, canonicalize=False)})"
    if isinstance(expr, IndAtom):
        return f"(ind {format_plg(expr.plg, canonicalize=False)})"
    if isinstance(expr, Sum):
        return "(sum " + " ".join(format_qexpr(c) for c in expr.children) + ")"
    if isinstance(expr, Product):
        return "(prod " + " ".join(format_qexpr(c) for c in expr.children) + ")"
    if isinstance(expr, Unlabel):
        inner = " ".join(str(t) for t in sorted(expr.keep))
        return f"(unlabel ({inner}) {format_qexpr(expr.child)})"
    if isinstance(expr, PolyImage):
        if expr.origin is None:
            raise ValueError("PolyImage without an origin cannot be serialized")
        return expr.origin
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _tokenize_sexpr(text):
    out = []
    for chunk in text.replace("(", " ( ").replace(")", " ) ").split():
        out.append(chunk)
    return out


def parse_qexpr(text):
    tokens = _tokenize_sexpr(text)
    if not tokens:
        raise FormatError("empty expression")
    expr, rest = _parse_node(tokens)
    if rest:
        raise FormatError(f"trailing tokens after expression: {' '.join(rest[:4])}")
    return expr


def _parse_node(tokens):
    if tokens[0] != "(":
        raise FormatError(f"expected '(', got {tokens[0]!r}")
    if len(tokens) < 2:
        raise FormatError("unterminated expression")
    head, rest = tokens[1], tokens[2:]
    if head == "q":
        flat, rest = _take_flat(rest)
        if len(flat) != 1:
            raise FormatError("(q ...) takes one rational")
        try:
            return Const(Fraction(flat[0])), rest
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad rational {flat[0]!r}") from None
    if head in ("g", "ind"):
        flat, rest = _take_flat(rest)
        plg = parse_plg(" ".join(flat))
        return (Atom(plg) if head == "g" else IndAtom(plg)), rest
    if head == "sum" or head == "prod":
        children = []
        while rest and rest[0] != ")":
            child, rest = _parse_node(rest)
            children.append(child)
        if not rest:
            raise FormatError(f"unterminated ({head} ...)")
        node = Sum(children) if head == "sum" else Product(children)
        return node, rest[1:]
    if head == "unlabel":
        if not rest or rest[0] != "(":
            raise FormatError("(unlabel ...) needs a label list")
        depth_close = rest.index(")")
        try:
            keep = [int(t) for t in rest[1:depth_close]]
        except ValueError:
            raise FormatError("label list must contain integers") from None
        child, rest = _parse_node(rest[depth_close + 1:])
        if not rest or rest[0] != ")":
            raise FormatError("unterminated (unlabel ...)")
        return Unlabel(keep, child), rest[1:]
    if head in QEXPR_HEADS:
        flat, rest = _take_flat(rest)
        return QEXPR_HEADS[head](flat), rest
    raise FormatError(f"unknown expression head {head!r}")


def _take_flat(tokens):
    """Consume tokens up to the node's closing paren; no nesting allowed."""
    flat = []
    for i, tok in enumerate(tokens):
        if tok == ")":
            return flat, tokens[i + 1:]
        if tok == "(":
            raise FormatError("unexpected '(' inside a flat node")
        flat.append(tok)
    raise FormatError("unterminated expression")
