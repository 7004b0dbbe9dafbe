"""Simple graphs and partially labeled graphs.

A partially labeled graph (PLG) is a simple finite graph together with an
injective assignment of distinct positive integer labels to some of its
vertices.  Two PLGs are considered the same object when a bijection of the
vertices preserves edges, non-edges, and every label; `canonical_form`
realizes that quotient by computing a deterministic canonical vertex order
(labeled vertices pinned first, in ascending label order).

Vertices are 0-based everywhere in code.  The text format and the docs use
1-based vertices, matching the usual v1..vk notation.
"""

from __future__ import annotations

import os
from itertools import combinations

from .errors import CapExceeded, FormatError

AUTOMORPHISM_CAP = 10
ENUMERATION_CAP = 7

_ENUM_CACHE_VERSION = "enum-v1"


class Graph:
    """An immutable simple graph on vertices 0..n-1."""

    __slots__ = ("n", "edges", "adj")

    def __init__(self, n, edges=()):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        norm = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            norm.add((u, v) if u < v else (v, u))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(norm))
        adj = [0] * n
        for u, v in norm:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        object.__setattr__(self, "adj", tuple(adj))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph({self.n}, {sorted(self.edges)})"

    def has_edge(self, u, v):
        return bool(self.adj[u] >> v & 1)

    def degree(self, v):
        return self.adj[v].bit_count()

    def neighbors(self, v):
        return _bits(self.adj[v])

    def induced(self, vertices):
        """Subgraph induced on `vertices`, re-indexed in the given order."""
        index = {v: i for i, v in enumerate(vertices)}
        edges = [
            (index[u], index[v])
            for u, v in self.edges
            if u in index and v in index
        ]
        return Graph(len(vertices), edges)

    @staticmethod
    def complete(n):
        return Graph(n, combinations(range(n), 2))

    @staticmethod
    def path(n):
        return Graph(n, ((i, i + 1) for i in range(n - 1)))

    @staticmethod
    def cycle(n):
        if n < 3:
            raise ValueError("cycle needs at least 3 vertices")
        return Graph(n, [(i, (i + 1) % n) for i in range(n)])


EMPTY_GRAPH = Graph(0)


def _bits(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class PartiallyLabeledGraph:
    """A graph plus an injective partial labeling by positive integers."""

    __slots__ = ("graph", "labels", "_canon")

    def __init__(self, graph, labels=()):
        if isinstance(labels, dict):
            labels = labels.items()
        labels = tuple(sorted((int(l), int(v)) for l, v in labels))
        seen_labels = set()
        seen_vertices = set()
        for lab, v in labels:
            if lab <= 0:
                raise ValueError(f"label {lab} is not a positive integer")
            if not 0 <= v < graph.n:
                raise ValueError(f"label {lab} on missing vertex {v}")
            if lab in seen_labels:
                raise ValueError(f"label {lab} used twice")
            if v in seen_vertices:
                raise ValueError(f"vertex {v} labeled twice")
            seen_labels.add(lab)
            seen_vertices.add(v)
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_canon", None)

    def __setattr__(self, name, value):
        raise AttributeError("PartiallyLabeledGraph is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, PartiallyLabeledGraph)
            and self.graph == other.graph
            and self.labels == other.labels
        )

    def __hash__(self):
        return hash((self.graph, self.labels))

    def __repr__(self):
        return f"PLG({self.graph!r}, labels={dict(self.labels)})"

    @property
    def n(self):
        return self.graph.n

    def label_set(self):
        return frozenset(lab for lab, _ in self.labels)

    def label_map(self):
        return dict(self.labels)

    def vertex_of(self, label):
        for lab, v in self.labels:
            if lab == label:
                return v
        raise KeyError(label)

    def is_fully_labeled(self):
        return len(self.labels) == self.graph.n

    def relabeled_vertices(self, perm):
        """Apply a vertex permutation: new index of old vertex v is perm[v]."""
        g = Graph(self.graph.n, ((perm[u], perm[v]) for u, v in self.graph.edges))
        return PartiallyLabeledGraph(g, ((lab, perm[v]) for lab, v in self.labels))

    def drop_labels(self, keep=()):
        keep = frozenset(keep)
        return PartiallyLabeledGraph(
            self.graph, (lv for lv in self.labels if lv[0] in keep)
        )

    def canonical(self):
        if self._canon is None:
            object.__setattr__(self, "_canon", canonical_form(self).plg)
        return self._canon

    def sort_key(self):
        """Deterministic total order on canonical PLGs, used for serialization."""
        c = self.canonical()
        return (c.n, len(c.graph.edges), sorted(c.graph.edges), c.labels)


PLG = PartiallyLabeledGraph


class CanonicalForm:
    """Canonical representative plus the relabeling taking the input to it."""

    __slots__ = ("plg", "certificate")

    def __init__(self, plg, certificate):
        self.plg = plg
        self.certificate = certificate

    def __repr__(self):
        return f"CanonicalForm({self.plg!r}, certificate={self.certificate})"


def canonical_form(g):
    """Canonical form of a PLG (or a bare Graph, treated as unlabeled).

    Labeled vertices are pinned to the first positions in ascending label
    order; the unlabeled remainder is ordered by color refinement plus
    backtracking, minimizing the adjacency encoding.  Disconnected graphs
    are canonicalized per component and reassembled, which sidesteps the
    branching blow-up on unions of many isomorphic pieces.  The certificate
    is a tuple `cert` with cert[old_vertex] = new_vertex.
    """
    if isinstance(g, Graph):
        g = PartiallyLabeledGraph(g)
    n = g.graph.n
    if n == 0:
        return CanonicalForm(g, ())
    comps = _components(g.graph)
    if len(comps) > 1:
        return _canonical_disconnected(g, comps)
    adj = g.graph.adj
    labeled = [v for _, v in g.labels]
    rest = sorted(set(range(n)) - set(labeled))
    cells = [[v] for v in labeled]
    if rest:
        cells.append(rest)

    best = None  # (encoding, order)

    def refine(cells):
        while True:
            masks = [_cell_mask(c) for c in cells]
            out = []
            split = False
            for cell in cells:
                if len(cell) == 1:
                    out.append(cell)
                    continue
                sig = {}
                for v in cell:
                    sig[v] = tuple((adj[v] & m).bit_count() for m in masks)
                groups = {}
                for v in cell:
                    groups.setdefault(sig[v], []).append(v)
                if len(groups) > 1:
                    split = True
                for key in sorted(groups):
                    out.append(groups[key])
            cells = out
            if not split:
                return cells

    def search(cells):
        nonlocal best
        cells = refine(cells)
        target = next((i for i, c in enumerate(cells) if len(c) > 1), None)
        if target is None:
            order = [c[0] for c in cells]
            enc = _encode(adj, order)
            if best is None or enc < best[0]:
                best = (enc, order)
            return
        cell = cells[target]
        if _all_twins(adj, cell):
            fixed = cells[:target] + [[v] for v in sorted(cell)] + cells[target + 1:]
            search(fixed)
            return
        for v in sorted(cell):
            branch = (
                cells[:target]
                + [[v], [u for u in cell if u != v]]
                + cells[target + 1:]
            )
            search(branch)

    search(cells)
    _, order = best
    cert = [0] * n
    for new, old in enumerate(order):
        cert[old] = new
    cert = tuple(cert)
    return CanonicalForm(g.relabeled_vertices(cert), cert)


def _components(graph):
    """Connected components as sorted vertex lists, in order of smallest vertex."""
    unseen = (1 << graph.n) - 1
    comps = []
    while unseen:
        start = (unseen & -unseen).bit_length() - 1
        frontier = 1 << start
        comp = 0
        while frontier:
            comp |= frontier
            nxt = 0
            for v in _bits(frontier):
                nxt |= graph.adj[v]
            frontier = nxt & ~comp
        comps.append(_bits(comp))
        unseen &= ~comp
    return comps


def _canonical_disconnected(g, comps):
    """Canonicalize each component, then assemble in a deterministic order.

    Global positions still follow the contract: one slot per label in
    ascending label order first, then the unlabeled vertices, grouped by
    component.  Components carrying labels come in order of their smallest
    label; unlabeled components are ordered by their canonical encoding, and
    ties there mean the components are interchangeable.
    """
    label_of = {v: lab for lab, v in g.labels}
    pieces = []
    for comp in comps:
        sub = PartiallyLabeledGraph(
            g.graph.induced(comp),
            [(label_of[v], i) for i, v in enumerate(comp) if v in label_of],
        )
        cf = canonical_form(sub)
        canon = cf.plg
        min_label = min((lab for lab, _ in canon.labels), default=None)
        enc_key = (
            canon.graph.n,
            _encode(canon.graph.adj, range(canon.graph.n)),
            canon.labels,
        )
        pieces.append((comp, cf, min_label, enc_key))
    with_labels = sorted((p for p in pieces if p[2] is not None), key=lambda p: p[2])
    without = sorted((p for p in pieces if p[2] is None), key=lambda p: p[3])

    all_labels = [lab for lab, _ in g.labels]
    label_pos = {lab: i for i, lab in enumerate(all_labels)}
    cert = [None] * g.graph.n
    next_free = len(all_labels)
    for comp, cf, _, _ in with_labels + without:
        placed = [lab for lab, _ in cf.plg.labels]
        for i, v in enumerate(comp):
            p = cf.certificate[i]
            if p < len(placed):
                cert[v] = label_pos[placed[p]]
            else:
                cert[v] = next_free + (p - len(placed))
        next_free += len(comp) - len(placed)
    cert = tuple(cert)
    return CanonicalForm(g.relabeled_vertices(cert), cert)


def _cell_mask(cell):
    m = 0
    for v in cell:
        m |= 1 << v
    return m


def _all_twins(adj, cell):
    """True when all vertices of `cell` are interchangeable twins.

    Requires identical neighborhoods outside the cell and a cell that is
    internally complete or internally empty; permuting such vertices is an
    automorphism, so no branching is needed.
    """
    mask = _cell_mask(cell)
    first = cell[0]
    outside = adj[first] & ~mask
    inside_deg = (adj[first] & mask).bit_count()
    if inside_deg not in (0, len(cell) - 1):
        return False
    for v in cell[1:]:
        if adj[v] & ~mask != outside:
            return False
        if (adj[v] & mask).bit_count() != inside_deg:
            return False
    return True


def _encode(adj, order):
    enc = 0
    for i, u in enumerate(order):
        row = adj[u]
        for v in order[i + 1:]:
            enc = enc << 1 | (row >> v & 1)
    return enc


def is_isomorphic_labeled(a, b):
    """Label-preserving isomorphism test via canonical forms."""
    if isinstance(a, Graph):
        a = PartiallyLabeledGraph(a)
    if isinstance(b, Graph):
        b = PartiallyLabeledGraph(b)
    return a.canonical() == b.canonical()


def automorphisms(g, cap=AUTOMORPHISM_CAP):
    """All adjacency-preserving vertex permutations of g.

    For a PLG, labeled vertices must be fixed points.  Returned as tuples
    `perm` with perm[v] = image of v, identity first.
    """
    plg = g if isinstance(g, PartiallyLabeledGraph) else PartiallyLabeledGraph(g)
    n = plg.graph.n
    if n > cap:
        raise CapExceeded(f"automorphisms supports n <= {cap}, got {n}")
    adj = plg.graph.adj
    degs = [adj[v].bit_count() for v in range(n)]
    fixed = {v for _, v in plg.labels}
    out = []
    perm = [-1] * n
    used = [False] * n

    def extend(v):
        if v == n:
            out.append(tuple(perm))
            return
        candidates = (perm[v],) if v in fixed else range(n)
        for w in candidates:
            if v in fixed:
                w = v
            if used[w] or degs[w] != degs[v]:
                continue
            ok = True
            for u in range(v):
                if (adj[v] >> u & 1) != (adj[w] >> perm[u] & 1):
                    ok = False
                    break
            if ok:
                used[w] = True
                perm[v] = w
                extend(v + 1)
                used[w] = False
                perm[v] = -1
            if v in fixed:
                break

    extend(0)
    out.sort()
    return out


def homogeneous_sets(g, cap=AUTOMORPHISM_CAP, all_distinct=False):
    """All vertex sets W with 1 < |W| <= n-1 whose members look alike outside W.

    The adopted condition is N(u) \\ W == N(v) \\ W for every two distinct
    u, v in W.  `all_distinct=True` instead requires those outside
    neighborhoods to be pairwise distinct, a stricter variant kept for
    comparison; nothing else uses it.
    """
    n = g.n
    if n > cap:
        raise CapExceeded(f"homogeneous_sets supports n <= {cap}, got {n}")
    adj = g.adj
    found = []
    for size in range(2, n):
        for comb in combinations(range(n), size):
            wmask = _cell_mask(comb)
            outs = [adj[v] & ~wmask for v in comb]
            if all_distinct:
                ok = len(set(outs)) == size
            else:
                ok = all(o == outs[0] for o in outs)
            if ok:
                found.append(frozenset(comb))
    found.sort(key=lambda w: (len(w), sorted(w)))
    return found


def is_stringent(g, cap=AUTOMORPHISM_CAP):
    """A graph is stringent when it has no homogeneous set and no nontrivial automorphism."""
    if homogeneous_sets(g, cap=cap):
        return False
    return len(automorphisms(g, cap=cap)) == 1


def stringent_graph(k):
    """The explicit stringent graph on k >= 6 vertices.

    A triangle v1 v2 v3, a path v3 v4 ... vk, and edges vk v2, vk v3
    (1-based names; vertex vi is index i-1).
    """
    if k < 6:
        raise ValueError(f"stringent_graph requires k >= 6, got {k}")
    edges = [(0, 1), (0, 2), (1, 2)]
    edges += [(i - 1, i) for i in range(3, k)]
    edges += [(k - 1, 1), (k - 1, 2)]
    return Graph(k, edges)


def _blowup(g, counts, within_edges):
    counts = tuple(int(c) for c in counts)
    if len(counts) != g.n:
        raise ValueError("need one count per vertex")
    if any(c < 1 for c in counts):
        raise ValueError("counts must be positive")
    offset = [0] * g.n
    total = 0
    for v in range(g.n):
        offset[v] = total
        total += counts[v]
    edges = []
    for u, v in g.edges:
        for i in range(counts[u]):
            for j in range(counts[v]):
                edges.append((offset[u] + i, offset[v] + j))
    if within_edges:
        for v in range(g.n):
            for i, j in combinations(range(counts[v]), 2):
                edges.append((offset[v] + i, offset[v] + j))
    return Graph(total, edges)


def independent_blowup(g, counts):
    """Replace vertex v by counts[v] pairwise non-adjacent copies."""
    return _blowup(g, counts, within_edges=False)


def clique_blowup(g, counts):
    """Replace vertex v by a clique of counts[v] copies."""
    return _blowup(g, counts, within_edges=True)


def blowup_block(counts, v):
    """The copy indices of original vertex v in a blow-up with these counts."""
    start = sum(counts[:v])
    return range(start, start + counts[v])


def enumerate_graphs(n, cap=ENUMERATION_CAP):
    """One canonical representative per isomorphism class of n-vertex graphs.

    Built incrementally: every n-vertex graph is an (n-1)-vertex graph plus
    one vertex with some neighborhood, so extending all classes and
    deduplicating by canonical form is exhaustive.  Counts follow the known
    sequence 1, 1, 2, 4, 11, 34, 156, 1044.
    """
    if n > cap:
        raise CapExceeded(f"enumerate_graphs supports n <= {cap}, got {n}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    cached = _enum_cache_read(n)
    if cached is not None:
        return cached
    if n == 0:
        result = [EMPTY_GRAPH]
    else:
        smaller = enumerate_graphs(n - 1, cap=cap)
        seen = {}
        for base in smaller:
            for nbhd in range(1 << (n - 1)):
                edges = list(base.edges)
                edges += [(v, n - 1) for v in _bits(nbhd)]
                g = Graph(n, edges)
                can = PartiallyLabeledGraph(g).canonical().graph
                seen.setdefault(can, None)
        result = sorted(seen, key=lambda g: (len(g.edges), sorted(g.edges)))
    _enum_cache_write(n, result)
    return result


def _enum_cache_path(n):
    root = os.environ.get("HOMDENS_CACHE_DIR")
    if not root:
        return None
    return os.path.join(root, f"{_ENUM_CACHE_VERSION}-n{n}.txt")


def _enum_cache_read(n):
    path = _enum_cache_path(n)
    if path is None or not os.path.exists(path):
        return None
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        return [parse_plg(ln).graph for ln in lines]
    except (OSError, ValueError):
        return None  # stale or corrupt cache entries are simply recomputed


def _enum_cache_write(n, graphs):
    path = _enum_cache_path(n)
    if path is None:
        return
    try:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for g in graphs:
                fh.write(format_plg(PartiallyLabeledGraph(g)) + "\n")
        os.replace(tmp, path)
    except OSError:
        pass


# ---------------------------------------------------------------------------
# Text format: plg n=<N> labels=<lab>:<vertex>[,...] edges=<u>-<v>[;...]
# Vertices are 1-based in the record.  Empty fields are omitted.


def format_plg(plg, canonicalize=True):
    if isinstance(plg, Graph):
        plg = PartiallyLabeledGraph(plg)
    if canonicalize:
        plg = plg.canonical()
    parts = [f"plg n={plg.graph.n}"]
    if plg.labels:
        parts.append("labels=" + ",".join(f"{lab}:{v + 1}" for lab, v in plg.labels))
    if plg.graph.edges:
        edges = sorted(plg.graph.edges)
        parts.append("edges=" + ";".join(f"{u + 1}-{v + 1}" for u, v in edges))
    return " ".join(parts)


def split_record_fields(text, line=None, allowed=("n", "labels", "edges", "weights")):
    """Split a `plg ...` record into its key=value fields."""
    tokens = text.split()
    if not tokens or tokens[0] != "plg":
        raise FormatError("expected record to start with 'plg'", line=line, column=1)
    fields = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise FormatError(f"malformed field {tok!r}", line=line)
        key, _, value = tok.partition("=")
        if key not in allowed:
            raise FormatError(f"unknown field {key!r}", line=line)
        if key in fields:
            raise FormatError(f"duplicate field {key!r}", line=line)
        fields[key] = value
    if "n" not in fields:
        raise FormatError("missing field 'n'", line=line)
    return fields


def parse_plg(text, line=None):
    fields = split_record_fields(text, line=line, allowed=("n", "labels", "edges"))
    return plg_from_fields(fields, line=line)


def plg_from_fields(fields, line=None):
    try:
        n = int(fields["n"])
    except ValueError:
        raise FormatError(f"bad vertex count {fields['n']!r}", line=line) from None
    labels = []
    if fields.get("labels"):
        for item in fields["labels"].split(","):
            lab, sep, v = item.partition(":")
            if not sep:
                raise FormatError(f"bad label item {item!r}", line=line)
            labels.append((_parse_int(lab, "label", line), _parse_int(v, "vertex", line) - 1))
    edges = []
    if fields.get("edges"):
        for item in fields["edges"].split(";"):
            u, sep, v = item.partition("-")
            if not sep:
                raise FormatError(f"bad edge item {item!r}", line=line)
            edges.append((_parse_int(u, "vertex", line) - 1, _parse_int(v, "vertex", line) - 1))
    try:
        return PartiallyLabeledGraph(Graph(n, edges), labels)
    except ValueError as exc:
        raise FormatError(str(exc), line=line) from None


def _parse_int(text, what, line):
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"bad {what} {text!r}", line=line) from None
