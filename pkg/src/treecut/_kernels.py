"""Numba kernels for the hot loops: random walks, tree bookkeeping, union-find.

Everything here works on flat int64/float64 arrays; the object-level wrappers
live in graph_core/trees. All randomness is consumed from caller-supplied
buffers so that the numpy Generator owns every random bit.
"""

import numpy as np
from numba import njit

WILSON_DONE = 0
WILSON_NEED_RANDOM = 1


@njit(cache=True)
def wilson_step(indptr, adj, in_tree, nxt, state, rbuf):
    """Resumable loop-erased random walk pass of Wilson's algorithm.

    state = [start_cursor, walk_node, buf_pos]; walk_node == -1 means "no walk
    in progress". Returns WILSON_DONE when nxt[] holds parent pointers toward
    the pre-seeded root, or WILSON_NEED_RANDOM when rbuf is exhausted (caller
    refills rbuf, resets buf_pos and calls again).
    """
    i = state[0]
    u = state[1]
    pos = state[2]
    n = in_tree.size
    nbuf = rbuf.size
    while i < n:
        if u == -1:
            if in_tree[i]:
                i += 1
                continue
            u = i
        # random walk from i until the tree is hit, recording last-exit arrows
        while not in_tree[u]:
            if pos >= nbuf:
                state[0] = i
                state[1] = u
                state[2] = pos
                return WILSON_NEED_RANDOM
            lo = indptr[u]
            deg = indptr[u + 1] - lo
            v = adj[lo + np.int64(rbuf[pos] * deg)]
            pos += 1
            nxt[u] = v
            u = v
        # retrace from i along the loop-erased path, attaching it to the tree
        u = i
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
        u = -1
        i += 1
    state[0] = i
    state[1] = u
    state[2] = pos
    return WILSON_DONE


@njit(cache=True)
def below_pops(parent, pops):
    """Population of the subtree hanging below each node (root gets the total)."""
    n = parent.size
    below = pops.copy()
    pending = np.zeros(n, np.int64)
    for u in range(n):
        p = parent[u]
        if p >= 0:
            pending[p] += 1
    stack = np.empty(n, np.int64)
    top = 0
    for u in range(n):
        if pending[u] == 0:
            stack[top] = u
            top += 1
    while top > 0:
        top -= 1
        u = stack[top]
        p = parent[u]
        if p >= 0:
            below[p] += below[u]
            pending[p] -= 1
            if pending[p] == 0:
                stack[top] = p
                top += 1
    return below


@njit(cache=True)
def count_exact_multiples(below, parent, k, total):
    """Number of tree edges whose below-population is a positive multiple of total/k."""
    count = 0
    for u in range(parent.size):
        if parent[u] >= 0 and (below[u] * k) % total == 0:
            count += 1
    return count


@njit(cache=True)
def _find(uf, x):
    root = x
    while uf[root] != root:
        root = uf[root]
    while uf[x] != root:
        nxt = uf[x]
        uf[x] = root
        x = nxt
    return root


@njit(cache=True)
def kruskal_parent(eu, ev, order, n, root):
    """Parent pointers (toward root) of the minimum spanning tree given an edge order."""
    uf = np.arange(n)
    tu = np.empty(n - 1, np.int64)
    tv = np.empty(n - 1, np.int64)
    cnt = 0
    for idx in order:
        a = _find(uf, eu[idx])
        b = _find(uf, ev[idx])
        if a != b:
            uf[a] = b
            tu[cnt] = eu[idx]
            tv[cnt] = ev[idx]
            cnt += 1
            if cnt == n - 1:
                break
    return root_tree(tu, tv, n, root)


@njit(cache=True)
def root_tree(tu, tv, n, root):
    """Orient an undirected tree (edge lists tu/tv) into parent pointers toward root."""
    deg = np.zeros(n, np.int64)
    m = tu.size
    for e in range(m):
        deg[tu[e]] += 1
        deg[tv[e]] += 1
    indptr = np.zeros(n + 1, np.int64)
    for u in range(n):
        indptr[u + 1] = indptr[u] + deg[u]
    fill = indptr[:n].copy()
    adj = np.empty(2 * m, np.int64)
    for e in range(m):
        adj[fill[tu[e]]] = tv[e]
        fill[tu[e]] += 1
        adj[fill[tv[e]]] = tu[e]
        fill[tv[e]] += 1
    parent = np.full(n, -1, np.int64)
    seen = np.zeros(n, np.bool_)
    seen[root] = True
    queue = np.empty(n, np.int64)
    queue[0] = root
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            v = adj[j]
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                queue[tail] = v
                tail += 1
    return parent


@njit(cache=True)
def cut_components(parent, cut, labels):
    """Component label per node after deleting marked parent edges (cut[u] on edge u->parent)."""
    n = parent.size
    for u in range(n):
        labels[u] = -1
    # path-compressed walk to each node's highest uncut ancestor
    path = np.empty(n, np.int64)
    for u in range(n):
        x = u
        depth = 0
        while labels[x] == -1 and parent[x] >= 0 and not cut[x]:
            path[depth] = x
            depth += 1
            x = parent[x]
        rep = labels[x] if labels[x] != -1 else x
        labels[u] = rep
        for d in range(depth):
            labels[path[d]] = rep
    return labels


@njit(cache=True)
def subtree_mask(parent, c):
    """Boolean mask of the nodes in the subtree rooted at c (children built on the fly)."""
    n = parent.size
    cnt = np.zeros(n, np.int64)
    for u in range(n):
        if parent[u] >= 0:
            cnt[parent[u]] += 1
    indptr = np.zeros(n + 1, np.int64)
    for u in range(n):
        indptr[u + 1] = indptr[u] + cnt[u]
    fill = indptr[:n].copy()
    child = np.empty(n, np.int64)
    for u in range(n):
        p = parent[u]
        if p >= 0:
            child[fill[p]] = u
            fill[p] += 1
    mask = np.zeros(n, np.bool_)
    mask[c] = True
    stack = np.empty(n, np.int64)
    stack[0] = c
    top = 1
    while top > 0:
        top -= 1
        u = stack[top]
        for j in range(indptr[u], indptr[u + 1]):
            v = child[j]
            mask[v] = True
            stack[top] = v
            top += 1
    return mask


@njit(cache=True)
def district_connectivity(eu, ev, assign, n, k):
    """True iff every district of the assignment induces a connected subgraph."""
    uf = np.arange(n)
    for e in range(eu.size):
        a = eu[e]
        b = ev[e]
        if assign[a] == assign[b]:
            ra = _find(uf, a)
            rb = _find(uf, b)
            if ra != rb:
                uf[ra] = rb
    seen = np.full(k, -1, np.int64)
    for u in range(n):
        d = assign[u]
        r = _find(uf, u)
        if seen[d] == -1:
            seen[d] = r
        elif seen[d] != r:
            return False
    return True


@njit(cache=True)
def connected_all(indptr, adj, n):
    """True iff the CSR graph is connected (BFS from node 0)."""
    if n <= 1:
        return True
    seen = np.zeros(n, np.bool_)
    seen[0] = True
    queue = np.empty(n, np.int64)
    queue[0] = 0
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for j in range(indptr[u], indptr[u + 1]):
            v = adj[j]
            if not seen[v]:
                seen[v] = True
                queue[tail] = v
                tail += 1
    return tail == n
