"""Graph representation, grid/file construction, quotients, and exact tree counting.

Graphs are immutable after construction: node ids are strings, everything else
is index-based numpy. Populations are integers and the ideal district
population is carried as an exact Fraction so validity checks never hit
floating-point edge cases.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from treecut import _kernels

NodeId = str


class GraphError(ValueError):
    """Malformed graph input (file contents, invariant violations)."""


class PlanError(ValueError):
    """Assignment that is not a valid district plan."""


class EnumerationLimitError(RuntimeError):
    """An exhaustive enumeration exceeded its configured guard."""


def _as_fraction(x) -> Fraction:
    """Exact Fraction from int/str/Fraction; floats go through repr (0.1 -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


class Graph:
    """Immutable node-weighted undirected simple graph.

    Attributes
    ----------
    ids : tuple of node id strings, in construction order (index order)
    pops : int64 array of positive populations
    edges : (m, 2) int64 array, each row (u, v) with u < v, no duplicates
    votes : optional mapping election name -> (n, 2) int64 array [dem, rep]
    grid_shape : (rows, cols) when built by build_grid, else None
    """

    __slots__ = ("ids", "pops", "edges", "votes", "grid_shape", "indptr", "adj", "_index", "_connected")

    def __init__(self, ids, pops, edges, votes=None, grid_shape=None, *, validate=True):
        self.ids = tuple(ids)
        self.pops = np.ascontiguousarray(pops, dtype=np.int64)
        self.edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
        self.votes = dict(votes) if votes else None
        self.grid_shape = tuple(grid_shape) if grid_shape else None
        self._index = None
        n = len(self.ids)
        m = self.edges.shape[0]
        if validate:
            if n == 0:
                raise GraphError("graph has no nodes")
            if len(set(self.ids)) != n:
                raise GraphError("duplicate node id")
            if self.pops.shape != (n,):
                raise GraphError("population array shape mismatch")
            if np.any(self.pops <= 0):
                raise GraphError("nonpositive population")
            if m:
                if np.any(self.edges < 0) or np.any(self.edges >= n):
                    raise GraphError("edge endpoint out of range")
                if np.any(self.edges[:, 0] == self.edges[:, 1]):
                    raise GraphError("self-loop")
                lo = np.minimum(self.edges[:, 0], self.edges[:, 1])
                hi = np.maximum(self.edges[:, 0], self.edges[:, 1])
                self.edges = np.stack([lo, hi], axis=1)
                keys = lo * n + hi
                if np.unique(keys).size != m:
                    raise GraphError("duplicate edge")
            order = np.lexsort((self.edges[:, 1], self.edges[:, 0])) if m else np.empty(0, np.int64)
            self.edges = np.ascontiguousarray(self.edges[order])
        self.indptr, self.adj = _build_csr(n, self.edges)
        self._connected = None
        if validate:
            if not _kernels.connected_all(self.indptr, self.adj, n):
                raise GraphError("graph is disconnected")
            self._connected = True

    # -- basic queries ----------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def total_pop(self) -> int:
        return int(self.pops.sum())

    def index(self, node_id: NodeId) -> int:
        if self._index is None:
            self._index = {nid: i for i, nid in enumerate(self.ids)}
        return self._index[node_id]

    def neighbors(self, u: int) -> np.ndarray:
        return self.adj[self.indptr[u] : self.indptr[u + 1]]

    def is_connected(self) -> bool:
        if self._connected is None:
            self._connected = bool(_kernels.connected_all(self.indptr, self.adj, self.n_nodes))
        return self._connected

    def ideal_pop(self, k: int) -> Fraction:
        return Fraction(self.total_pop, k)

    def __repr__(self):
        return f"Graph(n={self.n_nodes}, m={self.n_edges}, pop={self.total_pop})"

    def __reduce__(self):
        return (
            _rebuild_graph,
            (self.ids, self.pops, self.edges, self.votes, self.grid_shape),
        )


def _rebuild_graph(ids, pops, edges, votes, grid_shape):
    return Graph(ids, pops, edges, votes, grid_shape, validate=False)


def _build_csr(n, edges):
    m = edges.shape[0]
    if m <= 64:
        deg = [0] * n
        pairs = edges.tolist()
        for u, v in pairs:
            deg[u] += 1
            deg[v] += 1
        indptr = np.zeros(n + 1, np.int64)
        for u in range(n):
            indptr[u + 1] = indptr[u] + deg[u]
        adj = np.empty(2 * m, np.int64)
        fill = indptr[:n].copy()
        for u, v in pairs:
            adj[fill[u]] = v
            fill[u] += 1
            adj[fill[v]] = u
            fill[v] += 1
        return indptr, adj
    deg = np.zeros(n, np.int64)
    np.add.at(deg, edges[:, 0], 1)
    np.add.at(deg, edges[:, 1], 1)
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(deg, out=indptr[1:])
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = dst[np.argsort(src, kind="stable")]
    return indptr, np.ascontiguousarray(adj)


def make_graph(
    nodes: Sequence[tuple[NodeId, int]],
    edges: Iterable[tuple[NodeId, NodeId]],
    votes: Mapping[str, Mapping[NodeId, tuple[int, int]]] | None = None,
    grid_shape=None,
) -> Graph:
    """Build a Graph from (id, pop) pairs and id-pair edges."""
    ids = [nid for nid, _ in nodes]
    pops = [p for _, p in nodes]
    index = {nid: i for i, nid in enumerate(ids)}
    if len(index) != len(ids):
        raise GraphError("duplicate node id")
    try:
        eidx = [(index[a], index[b]) for a, b in edges]
    except KeyError as exc:
        raise GraphError(f"edge references unknown node {exc}") from None
    vote_arrays = None
    if votes:
        vote_arrays = {}
        for election, table in votes.items():
            arr = np.zeros((len(ids), 2), np.int64)
            for nid, (dem, rep) in table.items():
                if dem < 0 or rep < 0:
                    raise GraphError("negative vote count")
                arr[index[nid], 0] = dem
                arr[index[nid], 1] = rep
            vote_arrays[election] = arr
    return Graph(ids, pops, np.array(eidx, np.int64).reshape(-1, 2), vote_arrays, grid_shape)


def build_grid(rows: int, cols: int, node_pop: int = 1) -> Graph:
    """rows x cols grid with 4-neighbor adjacency and uniform node population."""
    if rows < 1 or cols < 1 or node_pop < 1:
        raise GraphError("rows, cols and node_pop must be positive")
    ids = [f"{r}-{c}" for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return Graph(
        ids,
        np.full(rows * cols, node_pop, np.int64),
        np.array(edges, np.int64).reshape(-1, 2),
        grid_shape=(rows, cols),
    )


def load_graph(path) -> Graph:
    """Read the dual-graph JSON format.

    {"nodes": [{"id": "...", "pop": 3, "votes": {"PRES16": {"dem": 1, "rep": 2}}}, ...],
     "edges": [["a", "b"], ...]}
    """
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise GraphError("file must contain 'nodes' and 'edges'")
    nodes = []
    votes: dict[str, dict[str, tuple[int, int]]] = {}
    for rec in data["nodes"]:
        nid = rec.get("id")
        if not isinstance(nid, str):
            raise GraphError("node id must be a string")
        pop = rec.get("pop")
        if not isinstance(pop, int) or pop <= 0:
            raise GraphError(f"nonpositive population for node {nid!r}")
        nodes.append((nid, pop))
        for election, tally in (rec.get("votes") or {}).items():
            votes.setdefault(election, {})[nid] = (int(tally["dem"]), int(tally["rep"]))
    edges = []
    for pair in data["edges"]:
        if len(pair) != 2:
            raise GraphError("edge must have two endpoints")
        if pair[0] == pair[1]:
            raise GraphError("self-loop")
        edges.append((pair[0], pair[1]))
    return make_graph(nodes, edges, votes or None)


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> Graph:
    """Subgraph on the given node indices with inherited populations and votes.

    Connectivity of the result is not asserted; callers that need it check.
    """
    if isinstance(nodes, np.ndarray) and nodes.size and np.all(np.diff(nodes) > 0):
        sel = nodes.astype(np.int64, copy=False)
    else:
        sel = np.asarray(sorted(set(int(u) for u in nodes)), np.int64)
    if sel.size == 0:
        raise GraphError("empty node set")
    if sel[0] < 0 or sel[-1] >= g.n_nodes:
        raise GraphError("unknown node index")
    local = np.full(g.n_nodes, -1, np.int64)
    local[sel] = np.arange(sel.size)
    if g.n_edges <= 64:
        edges = np.array(
            [
                (local[u], local[v])
                for u, v in g.edges.tolist()
                if local[u] >= 0 and local[v] >= 0
            ],
            np.int64,
        ).reshape(-1, 2)
    else:
        keep = (local[g.edges[:, 0]] >= 0) & (local[g.edges[:, 1]] >= 0)
        edges = local[g.edges[keep]]
    votes = None
    if g.votes:
        votes = {e: arr[sel] for e, arr in g.votes.items()}
    return Graph(
        [g.ids[u] for u in sel],
        g.pops[sel],
        edges,
        votes,
        None,
        validate=False,
    )


class MultiGraph:
    """Small undirected multigraph stored as a dense symmetric multiplicity matrix."""

    __slots__ = ("mult",)

    def __init__(self, mult):
        self.mult = np.ascontiguousarray(mult, dtype=object if _needs_object(mult) else np.int64)
        if self.mult.ndim != 2 or self.mult.shape[0] != self.mult.shape[1]:
            raise GraphError("multiplicity matrix must be square")
        if np.any(np.diag(self.mult) != 0):
            raise GraphError("self-loop in multigraph")

    @property
    def n_nodes(self) -> int:
        return self.mult.shape[0]

    def multiplicity(self, x: int, y: int) -> int:
        return int(self.mult[x, y])

    def total_multiplicity(self) -> int:
        return int(self.mult.sum()) // 2

    def __repr__(self):
        return f"MultiGraph(n={self.n_nodes}, edges={self.total_multiplicity()})"


def _needs_object(mult):
    arr = np.asarray(mult)
    return arr.dtype == object


def quotient_multigraph(g: Graph, blocks: Sequence[Iterable[int]]) -> MultiGraph:
    """Contract each block to one node, keeping cross-block edges with multiplicity."""
    n = g.n_nodes
    label = np.full(n, -1, np.int64)
    for b, block in enumerate(blocks):
        for u in block:
            u = int(u)
            if u < 0 or u >= n:
                raise GraphError("unknown node index in block")
            if label[u] != -1:
                raise GraphError("blocks overlap")
            label[u] = b
    if np.any(label == -1):
        raise GraphError("blocks do not cover all nodes")
    for b, block in enumerate(blocks):
        if not induced_subgraph(g, block).is_connected():
            raise GraphError(f"block {b} is disconnected")
    nb = len(blocks)
    mult = np.zeros((nb, nb), np.int64)
    bu = label[g.edges[:, 0]]
    bv = label[g.edges[:, 1]]
    cross = bu != bv
    np.add.at(mult, (bu[cross], bv[cross]), 1)
    np.add.at(mult, (bv[cross], bu[cross]), 1)
    return MultiGraph(mult)


# -- exact spanning-tree counting and enumeration -------------------------


def _bareiss_det(mat: list[list[int]]) -> int:
    """Exact determinant of an integer matrix via fraction-free elimination."""
    n = len(mat)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for col in range(n - 1):
        pivot_row = None
        for r in range(col, n):
            if mat[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            return 0
        if pivot_row != col:
            mat[col], mat[pivot_row] = mat[pivot_row], mat[col]
            sign = -sign
        pivot = mat[col][col]
        for r in range(col + 1, n):
            row_r = mat[r]
            row_c = mat[col]
            factor = row_r[col]
            for c in range(col + 1, n):
                row_r[c] = (row_r[c] * pivot - factor * row_c[c]) // prev
            row_r[col] = 0
        prev = pivot
    return sign * mat[n - 1][n - 1]


def _multiplicity_matrix(g: Graph | MultiGraph) -> list[list[int]]:
    if isinstance(g, MultiGraph):
        return [[int(x) for x in row] for row in g.mult]
    n = g.n_nodes
    mat = [[0] * n for _ in range(n)]
    for u, v in g.edges:
        mat[u][v] += 1
        mat[v][u] += 1
    return mat


def spanning_tree_count(g: Graph | MultiGraph) -> int:
    """Exact spanning-tree count via a Laplacian minor determinant (matrix-tree).

    Returns 0 for disconnected input.
    """
    mult = _multiplicity_matrix(g)
    n = len(mult)
    if n == 1:
        return 1
    lap = [
        [sum(mult[i]) if i == j else -mult[i][j] for j in range(n) if j != 0]
        for i in range(n)
        if i != 0
    ]
    return _bareiss_det(lap)


def enumerate_spanning_trees(g: Graph, *, guard: int = 10_000_000) -> Iterator[frozenset[int]]:
    """Yield every spanning tree of g exactly once, as a frozenset of edge indices.

    Contraction-deletion recursion; refuses up front when the matrix-tree count
    exceeds the guard.
    """
    if not g.is_connected():
        raise GraphError("graph is disconnected")
    total = spanning_tree_count(g)
    if total > guard:
        raise EnumerationLimitError(f"{total} spanning trees exceeds guard {guard}")
    n = g.n_nodes
    edges = [(int(u), int(v)) for u, v in g.edges]
    m = len(edges)

    def still_spans(active: list[int], uf: list[int]) -> bool:
        # does the remaining edge set connect the current super-nodes?
        comp = uf[:]

        def find(x):
            while comp[x] != x:
                comp[x] = comp[comp[x]]
                x = comp[x]
            return x

        parts = len({find(u) for u in range(n)})
        for ei in active:
            a, b = find(edges[ei][0]), find(edges[ei][1])
            if a != b:
                comp[a] = b
                parts -= 1
                if parts == 1:
                    return True
        return parts == 1

    def find_in(uf, x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    def rec(active: list[int], uf: list[int], chosen: tuple[int, ...], parts: int):
        if parts == 1:
            yield frozenset(chosen)
            return
        # next non-self-loop edge
        pos = 0
        while pos < len(active):
            ei = active[pos]
            if find_in(uf, edges[ei][0]) != find_in(uf, edges[ei][1]):
                break
            pos += 1
        rest = active[pos + 1 :]
        ei = active[pos]
        # include: contract the edge
        uf2 = uf[:]
        uf2[find_in(uf2, edges[ei][0])] = find_in(uf2, edges[ei][1])
        yield from rec(rest, uf2, chosen + (ei,), parts - 1)
        # exclude: only if the remainder still spans
        if still_spans(rest, uf):
            yield from rec(rest, uf[:], chosen, parts)

    yield from rec(list(range(m)), list(range(n)), (), n)


# -- district plans --------------------------------------------------------


class Plan:
    """Canonical assignment of nodes to k connected, population-balanced districts.

    Districts are relabeled in order of their smallest node index, so two
    plans are equal iff they induce the same partition of the node set.
    Population bounds are the non-strict (1 - eps) * ideal <= pop <= (1 + eps) * ideal.
    """

    __slots__ = ("graph", "assignment", "k", "epsilon", "_key")

    def __init__(self, graph: Graph, assignment, k: int, epsilon=0, *, validate: bool = True):
        self.graph = graph
        self.k = int(k)
        self.epsilon = _as_fraction(epsilon)
        arr = np.asarray(assignment, np.int64)
        if arr.shape != (graph.n_nodes,):
            raise PlanError("assignment must cover every node exactly once")
        self.assignment = _canonicalize(arr, self.k)
        self._key = self.assignment.tobytes()
        if validate:
            self._validate()

    @classmethod
    def from_node_sets(cls, graph, districts, epsilon=0, *, validate=True):
        arr = np.full(graph.n_nodes, -1, np.int64)
        for d, nodes in enumerate(districts):
            for u in nodes:
                arr[int(u)] = d
        return cls(graph, arr, len(districts), epsilon, validate=validate)

    @classmethod
    def from_id_map(cls, graph, mapping: Mapping[NodeId, int], k: int, epsilon=0, *, validate=True):
        arr = np.full(graph.n_nodes, -1, np.int64)
        for nid, d in mapping.items():
            arr[graph.index(nid)] = int(d)
        return cls(graph, arr, k, epsilon, validate=validate)

    def _validate(self):
        arr = self.assignment
        if np.any(arr < 0) or np.any(arr >= self.k):
            raise PlanError("district index out of range")
        counts = np.bincount(arr, minlength=self.k)
        if np.any(counts == 0):
            raise PlanError(f"expected {self.k} nonempty districts")
        ideal = self.graph.ideal_pop(self.k)
        lo = (1 - self.epsilon) * ideal
        hi = (1 + self.epsilon) * ideal
        pops = self.district_pops()
        for d in range(self.k):
            pop = int(pops[d])
            if not (lo <= pop <= hi):
                raise PlanError(
                    f"district {d} population {pop} outside [{lo}, {hi}] (epsilon={self.epsilon})"
                )
        if not _kernels.district_connectivity(
            self.graph.edges[:, 0], self.graph.edges[:, 1], arr, self.graph.n_nodes, self.k
        ):
            raise PlanError("district is disconnected")

    # -- queries -----------------------------------------------------------

    def district_nodes(self, d: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == d)

    def district_pops(self) -> np.ndarray:
        out = np.zeros(self.k, np.int64)
        np.add.at(out, self.assignment, self.graph.pops)
        return out

    def to_id_map(self) -> dict[NodeId, int]:
        return {self.graph.ids[u]: int(d) for u, d in enumerate(self.assignment)}

    def __eq__(self, other):
        return isinstance(other, Plan) and self.k == other.k and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Plan(k={self.k}, pops={self.district_pops().tolist()})"


def _canonicalize(arr: np.ndarray, k: int) -> np.ndarray:
    relabel = np.full(k, -1, np.int64)
    nxt = 0
    for d in arr:
        if relabel[d] == -1:
            relabel[d] = nxt
            nxt += 1
    return np.ascontiguousarray(relabel[arr])
