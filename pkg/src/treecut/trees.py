"""Random spanning trees (uniform and random-weight minimum) and cut-edge analysis.

A SpanningTree is stored as parent pointers toward a root plus the exact
population of the subtree below each edge; all split/validity logic runs on
those arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from treecut import _kernels
from treecut.graph_core import Graph, GraphError, _as_fraction, induced_subgraph

PhiFunction = Callable[[int], int]

_PHI_NAMED: dict[str, PhiFunction] = {
    "one": lambda n: 1,
    "identity": lambda n: n,
}


def resolve_phi(phi) -> PhiFunction:
    """Accept a named tolerance multiplier ("one", "identity") or a callable."""
    if callable(phi):
        return phi
    try:
        return _PHI_NAMED[phi]
    except KeyError:
        raise ValueError(f"unknown tolerance multiplier {phi!r}") from None


class SpanningTree:
    """Rooted spanning tree of a host graph with per-edge below-populations.

    Tree edges are identified by their child endpoint: edge u means
    (u, parent[u]), and below[u] is the population on the far side of that
    edge from the root. below[root] is the host total.
    """

    __slots__ = ("host", "parent", "below", "root")

    def __init__(self, host: Graph, parent: np.ndarray, root: int, below: np.ndarray | None = None):
        self.host = host
        self.parent = parent
        self.root = int(root)
        self.below = below if below is not None else _kernels.below_pops(parent, host.pops)

    @property
    def total_pop(self) -> int:
        return int(self.below[self.root])

    @property
    def n_nodes(self) -> int:
        return self.parent.size

    def tree_edges(self) -> list[tuple[int, int]]:
        """Edges as (child, parent) pairs in host-local indices."""
        return [(u, int(self.parent[u])) for u in range(self.n_nodes) if self.parent[u] >= 0]

    def child_of(self, edge: tuple[int, int]) -> int:
        u, v = edge
        if self.parent[u] == v:
            return int(u)
        if self.parent[v] == u:
            return int(v)
        raise ValueError(f"{edge} is not a tree edge")

    def below_pop(self, edge: tuple[int, int]) -> int:
        return int(self.below[self.child_of(edge)])

    def edge_ids(self, edge: tuple[int, int]) -> tuple[str, str]:
        return self.host.ids[edge[0]], self.host.ids[edge[1]]

    def __repr__(self):
        return f"SpanningTree(n={self.n_nodes}, root={self.root})"


def _wilson_parent(g: Graph, rng: np.random.Generator, root: int = 0) -> np.ndarray:
    n = g.n_nodes
    in_tree = np.zeros(n, np.bool_)
    in_tree[root] = True
    nxt = np.full(n, -1, np.int64)
    if n == 1:
        return nxt
    state = np.array([0, -1, 0], np.int64)
    size = max(128, 2 * n)
    while True:
        rbuf = rng.random(size)
        state[2] = 0
        rc = _kernels.wilson_step(g.indptr, g.adj, in_tree, nxt, state, rbuf)
        if rc == _kernels.WILSON_DONE:
            return nxt
        size = min(2 * size, 1 << 17)


def wilson_ust(g: Graph, rng: np.random.Generator) -> SpanningTree:
    """Uniform spanning tree via Wilson's loop-erased random walks.

    The root is the first host node; the root choice does not affect the
    uniform law but keeps runs reproducible.
    """
    if not g.is_connected():
        raise GraphError("graph is disconnected")
    parent = _wilson_parent(g, rng)
    return SpanningTree(g, parent, 0)


def random_weight_mst(g: Graph, rng: np.random.Generator, bias: np.ndarray | None = None) -> SpanningTree:
    """Kruskal minimum spanning tree on fresh iid uniform(0,1) edge weights.

    An optional per-edge bias array is added to the random weights before
    sorting (county-style upweighting); sort ties break by edge index.
    """
    if not g.is_connected():
        raise GraphError("graph is disconnected")
    n = g.n_nodes
    if n == 1:
        return SpanningTree(g, np.full(1, -1, np.int64), 0)
    weights = rng.random(g.n_edges)
    if bias is not None:
        weights = weights + bias
    order = np.argsort(weights, kind="stable")
    parent = _kernels.kruskal_parent(g.edges[:, 0], g.edges[:, 1], order, n, 0)
    return SpanningTree(g, parent, 0)


def load_edge_bias(g: Graph, path) -> np.ndarray:
    """Read a CSV of (idA, idB, bias) rows into a per-edge-index bias array."""
    lookup = {}
    for e, (u, v) in enumerate(g.edges):
        lookup[(int(u), int(v))] = e
    bias = np.zeros(g.n_edges, np.float64)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            a, b = g.index(row[0].strip()), g.index(row[1].strip())
            key = (a, b) if a < b else (b, a)
            if key not in lookup:
                raise GraphError(f"bias row {row[0]},{row[1]} is not a graph edge")
            bias[lookup[key]] = float(row[2])
    return bias


@dataclass(frozen=True)
class CutTriple:
    """Candidate split (edge, k1, k2) with its two population deviations.

    edge is (child, parent) in host-local indices; (k1, delta1) always
    describe the below-the-edge side.
    """

    edge: tuple[int, int]
    k1: int
    k2: int
    delta1: Fraction
    delta2: Fraction

    @property
    def max_delta(self) -> Fraction:
        return max(self.delta1, self.delta2)

    @property
    def child(self) -> int:
        return self.edge[0]


def valid_cut_edges_exact(t: SpanningTree, ideal) -> set[tuple[int, int]]:
    """Tree edges whose below-population is a positive integer multiple of ideal."""
    ideal = _as_fraction(ideal)
    num, den = ideal.numerator, ideal.denominator
    out = set()
    for u in range(t.n_nodes):
        p = int(t.parent[u])
        if p < 0:
            continue
        b = int(t.below[u])
        if (b * den) % num == 0 and 0 < b < t.total_pop:
            out.add((u, p))
    return out


def valid_cut_triples(t: SpanningTree, ideal, k: int, epsilon, phi="one") -> list[CutTriple]:
    """All (edge, k1, k2) with k1 + k2 = k and delta_i <= phi(k_i) * epsilon on both sides.

    delta_i = |pop(H_i) - k_i * ideal| / ideal, computed exactly; the triple's
    first side is always the below side of the edge.
    """
    if k < 2:
        return []
    ideal = _as_fraction(ideal)
    eps = _as_fraction(epsilon)
    phi_fn = resolve_phi(phi)
    a, c = ideal.numerator, ideal.denominator
    p, q = eps.numerator, eps.denominator
    total = t.total_pop
    # delta_i <= phi(k_i) * eps  <=>  |pop_i * c - k_i * a| * q * phi_den <= phi_num * p * a
    bounds = []
    for ki in range(1, k):
        f = Fraction(phi_fn(ki))
        if not 1 <= f <= ki:
            raise ValueError(f"tolerance multiplier must satisfy 1 <= phi(n) <= n, got phi({ki})={f}")
        bounds.append((f.numerator * p * a, f.denominator * q))
    out = []
    n = t.n_nodes
    if n * k <= 4096:
        parent = t.parent.tolist()
        below_all = t.below.tolist()
        for u in range(n):
            pu = parent[u]
            if pu < 0:
                continue
            b = below_all[u]
            bc = b * c
            rc = (total - b) * c
            for k1 in range(1, k):
                lim1, mul1 = bounds[k1 - 1]
                n1 = abs(bc - k1 * a)
                if n1 * mul1 > lim1:
                    continue
                k2 = k - k1
                lim2, mul2 = bounds[k2 - 1]
                n2 = abs(rc - k2 * a)
                if n2 * mul2 > lim2:
                    continue
                out.append(
                    CutTriple((u, pu), k1, k2, Fraction(n1, a), Fraction(n2, a))
                )
        return out
    children = np.flatnonzero(t.parent >= 0)
    max_mul = max(mul for _, mul in bounds)
    if (total * c + k * a) * max_mul < 2**62:
        below = t.below[children]
    else:
        below = t.below[children].astype(object)
    rest = total - below
    for k1 in range(1, k):
        k2 = k - k1
        lim1, mul1 = bounds[k1 - 1]
        lim2, mul2 = bounds[k2 - 1]
        ok = (abs(below * c - k1 * a) * mul1 <= lim1) & (abs(rest * c - k2 * a) * mul2 <= lim2)
        for idx in np.flatnonzero(ok):
            u = int(children[idx])
            b = int(below[idx])
            out.append(
                CutTriple(
                    edge=(u, int(t.parent[u])),
                    k1=k1,
                    k2=k2,
                    delta1=Fraction(abs(b * c - k1 * a), a),
                    delta2=Fraction(abs((total - b) * c - k2 * a), a),
                )
            )
    out.sort(key=lambda tr: (tr.child, tr.k1))
    return out


def split_tree(t: SpanningTree, edge: tuple[int, int]) -> tuple[SpanningTree, SpanningTree]:
    """Cut one tree edge; return the induced spanning trees (below side first)."""
    c = t.child_of(edge)
    mask = _kernels.subtree_mask(t.parent, c)
    below_nodes = np.flatnonzero(mask)
    rest_nodes = np.flatnonzero(~mask)
    bc = int(t.below[c])

    loc = np.full(t.n_nodes, -1, np.int64)
    loc[below_nodes] = np.arange(below_nodes.size)
    host1 = induced_subgraph(t.host, below_nodes)
    parent1 = np.full(below_nodes.size, -1, np.int64)
    for new_u, old_u in enumerate(below_nodes):
        if old_u != c:
            parent1[new_u] = loc[t.parent[old_u]]
    t1 = SpanningTree(host1, parent1, int(loc[c]), t.below[below_nodes].copy())

    adj_below = t.below.copy()
    x = int(t.parent[c])
    while x != -1:
        adj_below[x] -= bc
        x = int(t.parent[x])
    loc2 = np.full(t.n_nodes, -1, np.int64)
    loc2[rest_nodes] = np.arange(rest_nodes.size)
    host2 = induced_subgraph(t.host, rest_nodes)
    parent2 = np.full(rest_nodes.size, -1, np.int64)
    for new_u, old_u in enumerate(rest_nodes):
        if old_u != t.root:
            parent2[new_u] = loc2[t.parent[old_u]]
    t2 = SpanningTree(host2, parent2, int(loc2[t.root]), adj_below[rest_nodes].copy())
    return t1, t2


def components_after_cuts(t: SpanningTree, cut_children) -> list[np.ndarray]:
    """Node sets (host-local) of the pieces left after deleting the given edges.

    cut_children lists the child endpoints of the edges to delete; pieces come
    back ordered by smallest contained node index.
    """
    cut = np.zeros(t.n_nodes, np.bool_)
    for u in cut_children:
        cut[u] = True
    labels = np.empty(t.n_nodes, np.int64)
    _kernels.cut_components(t.parent, cut, labels)
    reps = {}
    pieces: list[list[int]] = []
    for u in range(t.n_nodes):
        r = labels[u]
        if r not in reps:
            reps[r] = len(pieces)
            pieces.append([])
        pieces[reps[r]].append(u)
    return [np.array(p, np.int64) for p in pieces]
