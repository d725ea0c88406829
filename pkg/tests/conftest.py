import numpy as np
import pytest

from treecut import build_grid, make_graph


def unbalanced_path():
    """20-vertex path with pops 11,9x10,11x9 (total 200): a toy instance where
    the most-balanced cut rule wedges the sampler at k=20, eps=0.1."""
    pops = [11] + [9] * 10 + [11] * 9
    nodes = [(f"n{i:02d}", p) for i, p in enumerate(pops)]
    edges = [(f"n{i:02d}", f"n{i+1:02d}") for i in range(19)]
    return make_graph(nodes, edges)


def random_connected_graph(rng, n, extra_edges=2):
    """Random connected graph on n nodes: a random tree plus a few extra edges."""
    nodes = [(f"v{i}", int(rng.integers(1, 5))) for i in range(n)]
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a = int(order[i])
        b = int(order[rng.integers(i)])
        edges.add((min(a, b), max(a, b)))
    tries = 0
    while len(edges) < n - 1 + extra_edges and tries < 50:
        a, b = rng.integers(n), rng.integers(n)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
        tries += 1
    return make_graph(nodes, [(f"v{a}", f"v{b}") for a, b in sorted(edges)])


def tree_key(t):
    """Frozenset of host edge indices of a spanning tree (for comparing laws)."""
    host = t.host
    lookup = {(int(u), int(v)): e for e, (u, v) in enumerate(host.edges)}
    out = []
    for u, p in t.tree_edges():
        key = (u, p) if u < p else (p, u)
        out.append(lookup[key])
    return frozenset(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def path4():
    return build_grid(1, 4)


@pytest.fixture
def grid22():
    return build_grid(2, 2)


@pytest.fixture
def grid23():
    return build_grid(2, 3)


@pytest.fixture
def grid33():
    return build_grid(3, 3)


@pytest.fixture
def wedge_path():
    return unbalanced_path()
