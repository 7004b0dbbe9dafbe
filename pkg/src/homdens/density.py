"""Exact density functionals.

Everything here returns exact rationals.  The basic quantities are
homomorphism densities t, injective densities t_inj, and induced densities
t_ind of a small graph in a larger one; labeled variants fix some vertices
through a root map (a dict label -> target vertex) and average the rest
over a vertex-weight distribution y.

t_ind uses the convention that a non-edge is respected by a pair of equal
images: an edge must go to a distinct adjacent pair, a non-edge to a pair
that is equal or non-adjacent.  This is what makes the partial-order and
Moebius identities exact sums over supergraphs, with no injectivity error
terms.

Quantum graphs evaluate linearly.  Structured expressions evaluate without
expansion: Product nodes multiply factor densities (gluing is
multiplicative for any label sets once the shared labels are pinned),
Unlabel nodes take an exact expectation over extensions of the root map,
and IndAtom nodes compute the exact-extension probability directly.  The
Unlabel sum is a depth-first search over label assignments that abandons a
branch as soon as the partial assignment already forces the child to
vanish, which keeps scans over embedding-free targets cheap.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product as iproduct
from math import comb

from .algebra import (
    Atom,
    Const,
    IndAtom,
    PolyImage,
    Product,
    QExpr,
    QuantumGraph,
    Sum,
    Unlabel,
    as_quantum,
)
from .errors import CapExceeded, FormatError
from .graphs import (
    Graph,
    PartiallyLabeledGraph,
    plg_from_fields,
    split_record_fields,
)
from .polynomials import Polynomial

UNLABEL_CAP = 8


def _as_graph(h):
    if isinstance(h, Graph):
        return h
    if isinstance(h, PartiallyLabeledGraph):
        if h.labels:
            raise ValueError("expected an unlabeled graph")
        return h.graph
    raise TypeError(f"expected a graph, got {type(h).__name__}")


class WeightedGraph:
    """A graph with a rational probability distribution on its vertices."""

    __slots__ = ("graph", "y")

    def __init__(self, graph, y):
        y = tuple(Fraction(w) for w in y)
        if len(y) != graph.n:
            raise ValueError("need one weight per vertex")
        if any(w < 0 for w in y):
            raise ValueError("negative vertex weight")
        if graph.n and sum(y) != 1:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "y", y)

    def __setattr__(self, name, value):
        raise AttributeError("WeightedGraph is immutable")

    @staticmethod
    def uniform(graph):
        n = graph.n
        return WeightedGraph(graph, [Fraction(1, n)] * n if n else [])

    def __eq__(self, other):
        return (
            isinstance(other, WeightedGraph)
            and self.graph == other.graph
            and self.y == other.y
        )

    def __repr__(self):
        return f"WeightedGraph({self.graph!r}, y={list(self.y)})"


def as_weighted(G):
    if isinstance(G, WeightedGraph):
        return G
    if isinstance(G, Graph):
        return WeightedGraph.uniform(G)
    raise TypeError(f"expected a graph or weighted graph, got {type(G).__name__}")


# ---------------------------------------------------------------------------
# Basic densities


def _search_order(graph, pinned, free=None):
    """Free vertices ordered so each has many already-placed neighbors."""
    placed = set(pinned)
    if free is None:
        free = [v for v in range(graph.n) if v not in placed]
    else:
        free = list(free)
    order = []
    while free:
        best = max(
            free,
            key=lambda v: (
                sum(1 for u in placed if graph.has_edge(u, v)),
                graph.degree(v),
                -v,
            ),
        )
        order.append(best)
        placed.add(best)
        free.remove(best)
    return order


def hom_count(h, g):
    """Number of maps V(h) -> V(g) sending every edge of h to an edge of g."""
    h, g = _as_graph(h), _as_graph(g)
    if h.n == 0:
        return 1
    if g.n == 0:
        return 0
    order = _search_order(h, ())
    image = {}
    full = (1 << g.n) - 1

    def rec(i):
        if i == len(order):
            return 1
        v = order[i]
        cand = full
        for u in image:
            if h.has_edge(u, v):
                cand &= g.adj[image[u]]
        total = 0
        while cand:
            low = cand & -cand
            cand ^= low
            image[v] = low.bit_length() - 1
            total += rec(i + 1)
        image.pop(v, None)
        return total

    return rec(0)


def t(h, g):
    """Probability that a uniformly random map V(h) -> V(g) is a homomorphism."""
    h, g = _as_graph(h), _as_graph(g)
    if h.n == 0:
        return Fraction(1)
    if g.n == 0:
        return Fraction(0)
    return Fraction(hom_count(h, g), g.n ** h.n)


def t_inj(h, g):
    """Density over injective maps; 0 when the target is smaller than h."""
    h, g = _as_graph(h), _as_graph(g)
    if h.n == 0:
        return Fraction(1)
    if g.n < h.n:
        return Fraction(0)
    order = _search_order(h, ())
    image = {}
    used = 0
    full = (1 << g.n) - 1
    count = 0

    def rec(i):
        nonlocal count, used
        if i == len(order):
            count += 1
            return
        v = order[i]
        cand = full & ~used
        for u in image:
            if h.has_edge(u, v):
                cand &= g.adj[image[u]]
        while cand:
            low = cand & -cand
            cand ^= low
            w = low.bit_length() - 1
            image[v] = w
            used |= low
            rec(i + 1)
            used &= ~low
        image.pop(v, None)

    rec(0)
    denom = 1
    for i in range(h.n):
        denom *= g.n - i
    return Fraction(count, denom)


def t_ind(h, g):
    """Exact-pattern density: edges land on distinct adjacent pairs, non-edges
    on equal or non-adjacent pairs."""
    h, g = _as_graph(h), _as_graph(g)
    if h.n == 0:
        return Fraction(1)
    if g.n == 0:
        return Fraction(0)
    image = {}
    count = 0

    def rec(v):
        nonlocal count
        if v == h.n:
            count += 1
            return
        for w in range(g.n):
            ok = True
            for u in range(v):
                if h.has_edge(u, v):
                    if not g.has_edge(image[u], w):
                        ok = False
                        break
                elif image[u] != w and g.has_edge(image[u], w):
                    ok = False
                    break
            if ok:
                image[v] = w
                rec(v + 1)
        image.pop(v, None)

    rec(0)
    return Fraction(count, g.n ** h.n)


def _pinned_ok(plg, graph, pinned):
    """Do the pinned vertices respect the edges among themselves?"""
    for u, v in plg.graph.edges:
        if u in pinned and v in pinned and not graph.has_edge(pinned[u], pinned[v]):
            return False
    return True


def _restrict(phi, labels):
    missing = set(labels) - set(phi)
    if missing:
        raise ValueError(f"root map missing labels {sorted(missing)}")
    return {lab: phi[lab] for lab in labels}


def t_rooted(h, G, phi):
    """Probability that a y-random extension of the root map is a homomorphism.

    Every labeled vertex of h is sent where phi sends its label; each
    unlabeled vertex is drawn independently from y.  phi's domain must be
    exactly the label set of h.
    """
    h = h if isinstance(h, PartiallyLabeledGraph) else PartiallyLabeledGraph(_as_graph(h))
    G = as_weighted(G)
    if set(phi) != set(h.label_set()):
        raise ValueError("root map domain must equal the label set")
    pinned = {v: phi[lab] for lab, v in h.labels}
    return _rooted_value(h, G.graph, G.y, pinned)


def _free_components(g, pinned):
    """Connected components of the pattern restricted to unpinned vertices."""
    free = [v for v in range(g.n) if v not in pinned]
    free_mask = 0
    for v in free:
        free_mask |= 1 << v
    seen = set()
    out = []
    for start in free:
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            rest = g.adj[v] & free_mask
            while rest:
                low = rest & -rest
                rest ^= low
                u = low.bit_length() - 1
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        out.append(comp)
    return out


def _rooted_value(plg, graph, weights, pinned):
    """Sum of prod-of-weights over homomorphism extensions of `pinned`.

    Unpinned vertices are processed one component of the pinned-deleted
    pattern at a time; the components extend independently, so their sums
    multiply.  That keeps glued products of small pieces cheap.
    """
    g = plg.graph
    if graph.n == 0:
        return Fraction(1) if g.n == 0 else Fraction(0)
    for v in pinned.values():
        if not 0 <= v < graph.n:
            raise ValueError(f"root image {v} outside the target graph")
    if not _pinned_ok(plg, graph, pinned):
        return Fraction(0)
    full = (1 << graph.n) - 1
    total = Fraction(1)
    for comp in _free_components(g, pinned):
        order = _search_order(g, pinned, free=comp)
        image = dict(pinned)

        def rec(i):
            if i == len(order):
                return Fraction(1)
            v = order[i]
            cand = full
            for u in image:
                if g.has_edge(u, v):
                    cand &= graph.adj[image[u]]
            part = Fraction(0)
            while cand:
                low = cand & -cand
                cand ^= low
                w = low.bit_length() - 1
                image[v] = w
                part += weights[w] * rec(i + 1)
            image.pop(v, None)
            return part

        value = rec(0)
        if isinstance(value, Fraction) and not value:
            return value
        total = value * total
    return total


def _exact_rooted_value(plg, graph, weights, pinned):
    """Like _rooted_value but for the exact-extension event of an IndAtom:
    edges need distinct adjacent images, non-edges equal or non-adjacent
    images."""
    g = plg.graph
    if graph.n == 0:
        return Fraction(1) if g.n == 0 else Fraction(0)
    pairs_bad = _exact_violation(g, pinned, graph)
    if pairs_bad:
        return Fraction(0)
    order = _search_order(g, pinned)
    image = dict(pinned)

    def rec(i):
        if i == len(order):
            return Fraction(1)
        v = order[i]
        placed = list(image.items())
        total = Fraction(0)
        for w in range(graph.n):
            ok = True
            for u, x in placed:
                if g.has_edge(u, v):
                    if not graph.has_edge(x, w):
                        ok = False
                        break
                elif x != w and graph.has_edge(x, w):
                    ok = False
                    break
            if ok:
                image[v] = w
                total += weights[w] * rec(i + 1)
        image.pop(v, None)
        return total

    return rec(0)


def _exact_violation(g, assigned, graph):
    """True when some assigned pair already breaks exactness."""
    items = list(assigned.items())
    for i, (u, x) in enumerate(items):
        for v, w in items[i + 1:]:
            if g.has_edge(u, v):
                if not graph.has_edge(x, w):
                    return True
            elif x != w and graph.has_edge(x, w):
                return True
    return False


# ---------------------------------------------------------------------------
# Quantum graphs and structured expressions


def t_quantum(f, G, phi=None):
    """Rooted weighted density, extended linearly and structurally.

    f may be a QuantumGraph (or plain graph material) or a QExpr tree; phi
    must cover every label of f.  Structured trees are never expanded.
    """
    G = as_weighted(G)
    phi = dict(phi or {})
    if isinstance(f, QExpr):
        _check_cover(f.label_set(), phi)
        return _eval_expr(f, G.graph, G.y, phi)
    f = as_quantum(f)
    _check_cover(f.label_set(), phi)
    total = Fraction(0)
    for plg, coeff in f.terms.items():
        pinned = {v: phi[lab] for lab, v in plg.labels}
        total += coeff * _rooted_value(plg, G.graph, G.y, pinned)
    return total


def _check_cover(labels, phi):
    missing = set(labels) - set(phi)
    if missing:
        raise ValueError(f"root map missing labels {sorted(missing)}")


def _eval_expr(expr, graph, weights, phi):
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Atom):
        plg = expr.plg
        pinned = {v: phi[lab] for lab, v in plg.labels}
        return _rooted_value(plg, graph, weights, pinned)
    if isinstance(expr, IndAtom):
        plg = expr.plg
        pinned = {v: phi[lab] for lab, v in plg.labels}
        return _exact_rooted_value(plg, graph, weights, pinned)
    if isinstance(expr, Sum):
        total = Fraction(0)
        for child in expr.children:
            total = total + _eval_expr(child, graph, weights, phi)
        return total
    if isinstance(expr, Product):
        total = Fraction(1)
        for child in expr.children:
            total = total * _eval_expr(child, graph, weights, phi)
        return total
    if isinstance(expr, Unlabel):
        return _eval_unlabel(expr, graph, weights, phi)
    if isinstance(expr, PolyImage):
        values = {
            var: _eval_expr(gen, graph, weights, phi) for var, gen in expr.generators
        }
        return _poly_at(expr.poly, values)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _eval_unlabel(expr, graph, weights, phi):
    inner_labels = expr.child.label_set()
    free = sorted(inner_labels - expr.keep)
    if len(free) > UNLABEL_CAP:
        raise CapExceeded(
            f"unlabeling over {len(free)} labels exceeds cap {UNLABEL_CAP}"
        )
    base = {lab: phi[lab] for lab in inner_labels & expr.keep}

    def rec(i, assignment):
        if _prune(expr.child, assignment, graph):
            return Fraction(0)
        if i == len(free):
            return _eval_expr(expr.child, graph, weights, assignment)
        total = Fraction(0)
        for v in range(graph.n):
            assignment[free[i]] = v
            sub = rec(i + 1, assignment)
            if sub:
                total += weights[v] * sub
            del assignment[free[i]]
        return total

    return rec(0, dict(base))


def _prune(expr, assignment, graph):
    """True only when every completion of `assignment` makes expr vanish."""
    if isinstance(expr, Const):
        return expr.value == 0
    if isinstance(expr, Atom):
        plg = expr.plg
        label_of = {v: lab for lab, v in plg.labels}
        for u, v in plg.graph.edges:
            lu, lv = label_of.get(u), label_of.get(v)
            if lu in assignment and lv in assignment:
                if not graph.has_edge(assignment[lu], assignment[lv]):
                    return True
        return False
    if isinstance(expr, IndAtom):
        plg = expr.plg
        assigned = {
            v: assignment[lab] for lab, v in plg.labels if lab in assignment
        }
        return _exact_violation(plg.graph, assigned, graph)
    if isinstance(expr, Sum):
        return bool(expr.children) and all(
            _prune(c, assignment, graph) for c in expr.children
        )
    if isinstance(expr, Product):
        return any(_prune(c, assignment, graph) for c in expr.children)
    if isinstance(expr, Unlabel):
        visible = {lab: v for lab, v in assignment.items() if lab in expr.keep}
        return _prune(expr.child, visible, graph)
    if isinstance(expr, PolyImage):
        if any(not _prune(gen, assignment, graph) for _, gen in expr.generators):
            return False
        return _poly_constant_term(expr.poly) == 0
    return False


def _poly_constant_term(poly):
    if isinstance(poly, Polynomial):
        return poly.constant_term()
    return poly.constant_term()


def _poly_at(poly, values):
    """Evaluate a polynomial-like object at rational or polynomial values."""
    if isinstance(poly, Polynomial):
        total = Fraction(0)
        for exps, coeff in poly.terms.items():
            term = coeff
            for var, e in zip(poly.vars, exps):
                if e:
                    term = term * values[var] ** e
            total = total + term
        return total
    return poly.evaluate(values)


# ---------------------------------------------------------------------------
# Symbolic density polynomials


def density_polynomial(f, g, phi=None):
    """The density as a polynomial in vertex weights y_1..y_n of the target.

    Evaluating the result at any probability distribution equals
    t_quantum(f, (g, y), phi).  Quantum-graph inputs take a fast path that
    bins homomorphism extensions by their image multiset; structured trees
    are evaluated with symbolic weights.
    """
    g = _as_graph(g) if not isinstance(g, WeightedGraph) else g.graph
    phi = dict(phi or {})
    yvars = tuple(f"y{i}" for i in range(1, g.n + 1))
    if isinstance(f, QExpr):
        _check_cover(f.label_set(), phi)
        weights = [Polynomial.variable(v, yvars) for v in yvars]
        value = _eval_expr(f, g, weights, phi)
        if isinstance(value, Polynomial):
            return value.in_vars(yvars)
        return Polynomial.constant(value, yvars)
    f = as_quantum(f)
    _check_cover(f.label_set(), phi)
    acc = {}
    for plg, coeff in f.terms.items():
        pinned = {v: phi[lab] for lab, v in plg.labels}
        _accumulate_hom_monomials(plg, g, pinned, coeff, acc)
    return Polynomial(yvars, acc)


def _accumulate_hom_monomials(plg, g, pinned, coeff, acc):
    """Add coeff * prod y_{image(v)} to acc for every hom extension."""
    h = plg.graph
    if g.n == 0:
        if h.n == 0:
            key = ()
            acc[key] = acc.get(key, 0) + coeff
        return
    for v in pinned.values():
        if not 0 <= v < g.n:
            raise ValueError(f"root image {v} outside the target graph")
    if not _pinned_ok(plg, g, pinned):
        return
    order = _search_order(h, pinned)
    image = dict(pinned)
    counts = [0] * g.n
    full = (1 << g.n) - 1

    def rec(i):
        if i == len(order):
            key = tuple(counts)
            acc[key] = acc.get(key, 0) + coeff
            return
        v = order[i]
        cand = full
        for u in image:
            if h.has_edge(u, v):
                cand &= g.adj[image[u]]
        while cand:
            low = cand & -cand
            cand ^= low
            w = low.bit_length() - 1
            image[v] = w
            counts[w] += 1
            rec(i + 1)
            counts[w] -= 1
        image.pop(v, None)

    rec(0)


# ---------------------------------------------------------------------------
# Step graphons


class StepGraphon:
    """A symmetric step function on [0,1]^2 with rational block structure."""

    __slots__ = ("measures", "weights")

    def __init__(self, measures, weights):
        measures = tuple(Fraction(m) for m in measures)
        weights = tuple(tuple(Fraction(w) for w in row) for row in weights)
        k = len(measures)
        if any(m < 0 for m in measures):
            raise ValueError("negative block measure")
        if sum(measures) != 1:
            raise ValueError("block measures must sum to 1")
        if len(weights) != k or any(len(row) != k for row in weights):
            raise ValueError("weight matrix must be k by k")
        for i in range(k):
            for j in range(k):
                if weights[i][j] != weights[j][i]:
                    raise ValueError("weight matrix must be symmetric")
                if not 0 <= weights[i][j] <= 1:
                    raise ValueError("weights must lie in [0,1]")
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):
        raise AttributeError("StepGraphon is immutable")

    @property
    def k(self):
        return len(self.measures)

    def _breakpoints(self):
        out = [Fraction(0)]
        for m in self.measures:
            out.append(out[-1] + m)
        return out

    def refined(self, cuts):
        """The same graphon over the finer partition given by `cuts`."""
        own = self._breakpoints()
        cuts = sorted(set(own) | set(cuts))
        measures = []
        index = []
        for a, b in zip(cuts, cuts[1:]):
            if a == b:
                continue
            measures.append(b - a)
            block = next(i for i in range(self.k) if own[i] <= a < own[i + 1])
            index.append(block)
        weights = [
            [self.weights[index[i]][index[j]] for j in range(len(index))]
            for i in range(len(index))
        ]
        return StepGraphon(measures, weights)

    def __eq__(self, other):
        if not isinstance(other, StepGraphon):
            return NotImplemented
        cuts = set(self._breakpoints()) | set(other._breakpoints())
        a, b = self.refined(cuts), other.refined(cuts)
        return a.measures == b.measures and a.weights == b.weights

    def __repr__(self):
        return f"StepGraphon(measures={list(self.measures)})"


def w_from_graph(g):
    """The step graphon with one equal block per vertex and 0/1 adjacency."""
    g = _as_graph(g)
    if g.n == 0:
        raise ValueError("cannot build a graphon from the empty graph")
    m = Fraction(1, g.n)
    weights = [
        [Fraction(1) if g.has_edge(i, j) else Fraction(0) for j in range(g.n)]
        for i in range(g.n)
    ]
    return StepGraphon([m] * g.n, weights)


def mix(w, wp, alpha):
    """Pointwise convex combination (1-alpha) w + alpha w' on a common refinement."""
    alpha = Fraction(alpha)
    cuts = set(w._breakpoints()) | set(wp._breakpoints())
    a, b = w.refined(cuts), wp.refined(cuts)
    weights = [
        [(1 - alpha) * a.weights[i][j] + alpha * b.weights[i][j] for j in range(a.k)]
        for i in range(a.k)
    ]
    return StepGraphon(a.measures, weights)


def t_graphon(h, w):
    """Block-sum homomorphism density of h in a step graphon."""
    h = _as_graph(h)
    if h.n == 0:
        return Fraction(1)
    total = Fraction(0)
    for blocks in iproduct(range(w.k), repeat=h.n):
        value = Fraction(1)
        for v in range(h.n):
            value *= w.measures[blocks[v]]
            if not value:
                break
        if not value:
            continue
        for u, v in h.edges:
            value *= w.weights[blocks[u]][blocks[v]]
            if not value:
                break
        total += value
    return total


# ---------------------------------------------------------------------------
# The near-injectivity bound


def check_tasym(h, g):
    """|t - t_inj| <= C(|V(h)|, 2) / |V(g)|, the random-collision bound."""
    h, g = _as_graph(h), _as_graph(g)
    gap = abs(t(h, g) - t_inj(h, g))
    if g.n == 0:
        return gap == 0
    return gap <= Fraction(comb(h.n, 2), g.n)


# ---------------------------------------------------------------------------
# Text formats


def format_weighted_graph(G):
    G = as_weighted(G)
    parts = [f"plg n={G.graph.n}"]
    if G.graph.edges:
        edges = sorted(G.graph.edges)
        parts.append("edges=" + ";".join(f"{u + 1}-{v + 1}" for u, v in edges))
    if G.graph.n:
        parts.append("weights=" + ",".join(str(w) for w in G.y))
    return " ".join(parts)


def parse_weighted_graph(text, line=None):
    fields = split_record_fields(text, line=line, allowed=("n", "edges", "weights"))
    plg = plg_from_fields({k: v for k, v in fields.items() if k != "weights"}, line=line)
    n = plg.graph.n
    if fields.get("weights"):
        try:
            y = [Fraction(wtxt) for wtxt in fields["weights"].split(",")]
        except (ValueError, ZeroDivisionError):
            raise FormatError("bad weight entry", line=line) from None
    else:
        y = [Fraction(1, n)] * n if n else []
    try:
        return WeightedGraph(plg.graph, y)
    except ValueError as exc:
        raise FormatError(str(exc), line=line) from None


def format_graphon(w):
    rows = ";".join(",".join(str(x) for x in row) for row in w.weights)
    measures = ",".join(str(m) for m in w.measures)
    return f"graphon k={w.k} measures={measures} rows={rows}"


def parse_graphon(text, line=None):
    tokens = text.split()
    if not tokens or tokens[0] != "graphon":
        raise FormatError("expected record to start with 'graphon'", line=line)
    fields = {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep or key not in ("k", "measures", "rows"):
            raise FormatError(f"malformed field {tok!r}", line=line)
        if key in fields:
            raise FormatError(f"duplicate field {key!r}", line=line)
        fields[key] = value
    try:
        k = int(fields.get("k", ""))
        measures = [Fraction(m) for m in fields["measures"].split(",")] if k else []
        rows = [
            [Fraction(x) for x in row.split(",")]
            for row in fields["rows"].split(";")
        ] if k else []
    except (KeyError, ValueError, ZeroDivisionError):
        raise FormatError("bad graphon record", line=line) from None
    if len(measures) != k or len(rows) != k:
        raise FormatError("graphon record sizes disagree with k", line=line)
    try:
        return StepGraphon(measures, rows)
    except ValueError as exc:
        raise FormatError(str(exc), line=line) from None
