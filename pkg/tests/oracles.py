"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately naive: permutations, all maps, all edge
subsets.  These functions never import from homdens internals beyond the
Graph/PLG data holders, so a bug in the package cannot hide in its own
oracle.
"""

from fractions import Fraction
from itertools import combinations, permutations, product

from homdens.graphs import Graph, PartiallyLabeledGraph


def brute_isomorphic(a, b):
    """Label-preserving isomorphism by trying every vertex bijection."""
    if isinstance(a, Graph):
        a = PartiallyLabeledGraph(a)
    if isinstance(b, Graph):
        b = PartiallyLabeledGraph(b)
    if a.graph.n != b.graph.n:
        return False
    if len(a.graph.edges) != len(b.graph.edges):
        return False
    if a.label_set() != b.label_set():
        return False
    n = a.graph.n
    la, lb = a.label_map(), b.label_map()
    for perm in permutations(range(n)):
        if any(perm[la[lab]] != lb[lab] for lab in la):
            continue
        mapped = {(min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in a.graph.edges}
        if mapped == set(b.graph.edges):
            return True
    return False


def brute_automorphism_count(g):
    if isinstance(g, Graph):
        g = PartiallyLabeledGraph(g)
    n = g.graph.n
    edges = g.graph.edges
    fixed = dict(g.labels)
    count = 0
    for perm in permutations(range(n)):
        if any(perm[v] != v for _, v in g.labels):
            continue
        mapped = {(min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in edges}
        if mapped == set(edges):
            count += 1
    return count


def brute_graph_classes(n):
    """Count of isomorphism classes of n-vertex graphs by filtering all edge sets."""
    pairs = list(combinations(range(n), 2))
    reps = []
    for bits in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if bits >> i & 1]
        g = Graph(n, edges)
        if not any(brute_isomorphic(g, h) for h in reps):
            reps.append(g)
    return reps


def brute_hom_count(h, g):
    """Number of maps V(h) -> V(g) sending every edge to an edge."""
    if h.n == 0:
        return 1
    count = 0
    for phi in product(range(g.n), repeat=h.n):
        if all(g.has_edge(phi[u], phi[v]) for u, v in h.edges):
            count += 1
    return count


def brute_t(h, g):
    if g.n == 0:
        return Fraction(1) if h.n == 0 else Fraction(0)
    return Fraction(brute_hom_count(h, g), g.n ** h.n)


def brute_t_inj(h, g):
    if h.n == 0:
        return Fraction(1)
    if g.n < h.n:
        return Fraction(0)
    count = 0
    for phi in permutations(range(g.n), h.n):
        if all(g.has_edge(phi[u], phi[v]) for u, v in h.edges):
            count += 1
    denom = 1
    for i in range(h.n):
        denom *= g.n - i
    return Fraction(count, denom)


def brute_t_ind(h, g):
    """Induced density with the equal-image convention.

    A map must send each edge of h to an edge of g between distinct images,
    while each non-edge of h must go to a pair with equal or non-adjacent
    images.
    """
    if g.n == 0:
        return Fraction(1) if h.n == 0 else Fraction(0)
    if h.n == 0:
        return Fraction(1)
    count = 0
    pairs = list(combinations(range(h.n), 2))
    edge_set = h.edges
    for phi in product(range(g.n), repeat=h.n):
        ok = True
        for u, v in pairs:
            a, b = phi[u], phi[v]
            if (u, v) in edge_set:
                if a == b or not g.has_edge(a, b):
                    ok = False
                    break
            else:
                if a != b and g.has_edge(a, b):
                    ok = False
                    break
        if ok:
            count += 1
    return Fraction(count, g.n ** h.n)


def brute_rooted_t(h, g, phi_partial, y=None):
    """Rooted density: average over extensions of the labeled-vertex map.

    phi_partial maps each labeled vertex of h (by vertex index) to a vertex
    of g.  y is an optional vertex weight distribution on g (list of
    Fractions summing to 1); None means uniform.
    """
    if isinstance(h, Graph):
        h = PartiallyLabeledGraph(h)
    hg = h.graph
    pinned = dict(phi_partial)
    free = [v for v in range(hg.n) if v not in pinned]
    if y is None:
        y = [Fraction(1, g.n)] * g.n
    total = Fraction(0)
    for assignment in product(range(g.n), repeat=len(free)):
        phi = dict(pinned)
        phi.update(zip(free, assignment))
        if all(g.has_edge(phi[u], phi[v]) for u, v in hg.edges):
            w = Fraction(1)
            for v in free:
                w *= y[phi[v]]
            total += w
    return total


def brute_weighted_t(h, g, y):
    """Fully weighted homomorphism density with vertex distribution y."""
    if h.n == 0:
        return Fraction(1)
    total = Fraction(0)
    for phi in product(range(g.n), repeat=h.n):
        if all(g.has_edge(phi[u], phi[v]) for u, v in h.edges):
            w = Fraction(1)
            for v in range(h.n):
                w *= y[phi[v]]
            total += w
    return total


def brute_exact_embeddings(h, g):
    """Maps preserving both adjacency and non-adjacency (not necessarily injective)."""
    out = []
    for phi in product(range(g.n), repeat=h.n):
        ok = True
        for u, v in combinations(range(h.n), 2):
            hu = h.has_edge(u, v)
            a, b = phi[u], phi[v]
            if hu:
                if a == b or not g.has_edge(a, b):
                    ok = False
                    break
            else:
                if a != b and g.has_edge(a, b):
                    ok = False
                    break
        if ok:
            out.append(phi)
    return out
