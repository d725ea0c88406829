"""Exact distributions and brute-force references for the tree-cut samplers.

Everything here is desk-scale and exact: plan probabilities are Fractions,
spanning-tree counts are big integers, and floating point only appears when a
caller converts for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from treecut import _kernels
from treecut.graph_core import (
    EnumerationLimitError,
    Graph,
    GraphError,
    MultiGraph,
    Plan,
    _as_fraction,
    enumerate_spanning_trees,
    induced_subgraph,
    spanning_tree_count,
)


@dataclass(frozen=True)
class ExactDistribution:
    """Exact probability law over canonical plans; probabilities sum to exactly 1."""

    support: tuple[Plan, ...]
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise ValueError("support/probability length mismatch")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive on the support")
        if sum(self.probs, Fraction(0)) != 1:
            raise ValueError("probabilities must sum to exactly 1")

    def prob(self, plan: Plan) -> Fraction:
        for p, pr in zip(self.support, self.probs):
            if p == plan:
                return pr
        return Fraction(0)

    def as_dict(self) -> dict[Plan, Fraction]:
        return dict(zip(self.support, self.probs))

    def to_json_obj(self) -> list[dict]:
        return [
            {
                "plan": plan.to_id_map(),
                "prob_num": str(pr.numerator),
                "prob_den": str(pr.denominator),
            }
            for plan, pr in zip(self.support, self.probs)
        ]


# -- exhaustive plan enumeration -------------------------------------------


def enumerate_plans(g: Graph, k: int, epsilon=0, *, max_states: int = 2_000_000) -> list[Plan]:
    """All connected k-partitions satisfying the population bounds, canonical and deduplicated.

    Carves the district containing the smallest unassigned node first, so each
    plan is generated exactly once; population bounds prune the recursion.
    """
    if k < 1:
        raise ValueError("k must be positive")
    eps = _as_fraction(epsilon)
    ideal = g.ideal_pop(k)
    lo = (1 - eps) * ideal
    hi = (1 + eps) * ideal
    pops = g.pops
    nbrs = [list(map(int, g.neighbors(u))) for u in range(g.n_nodes)]
    states = 0
    plans: list[Plan] = []

    def feasible(rest: frozenset[int], k_left: int) -> bool:
        if k_left == 0:
            return not rest
        if not rest:
            return False
        # component-wise budget check
        comps = []
        seen = set()
        for start in rest:
            if start in seen:
                continue
            comp_pop = 0
            stack = [start]
            seen.add(start)
            while stack:
                u = stack.pop()
                comp_pop += int(pops[u])
                for w in nbrs[u]:
                    if w in rest and w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(comp_pop)
        if len(comps) > k_left:
            return False
        kmin_total = 0
        kmax_total = 0
        for cp in comps:
            kmin = math.ceil(Fraction(cp) / hi) if hi > 0 else 1
            kmax = math.floor(Fraction(cp) / lo) if lo > 0 else k_left
            kmin = max(kmin, 1)
            if kmin > kmax:
                return False
            kmin_total += kmin
            kmax_total += kmax
        return kmin_total <= k_left <= kmax_total

    def connected_subsets(v: int, allowed: frozenset[int]):
        """Connected subsets of `allowed` containing v with population in [lo, hi]."""
        out: list[frozenset[int]] = []

        def rec(members: set[int], pop: int, ext: list[int], forbidden: set[int]):
            nonlocal states
            states += 1
            if states > max_states:
                raise EnumerationLimitError(f"plan enumeration exceeded {max_states} states")
            if lo <= pop <= hi:
                out.append(frozenset(members))
            local_forbidden: set[int] = set()
            for i, u in enumerate(ext):
                if pop + int(pops[u]) <= hi:
                    new_ext = list(ext[i + 1 :])
                    seen = set(new_ext) | members | forbidden | local_forbidden | {u}
                    for w in nbrs[u]:
                        if w in allowed and w not in seen:
                            new_ext.append(w)
                            seen.add(w)
                    members.add(u)
                    rec(members, pop + int(pops[u]), new_ext, forbidden | local_forbidden)
                    members.remove(u)
                local_forbidden.add(u)

        rec({v}, int(pops[v]), [u for u in nbrs[v] if u in allowed], set())
        return out

    def carve(remaining: frozenset[int], k_left: int, acc: list[frozenset[int]]):
        if k_left == 0:
            plans.append(Plan.from_node_sets(g, acc, eps))
            return
        v = min(remaining)
        for district in connected_subsets(v, remaining):
            rest = remaining - district
            if feasible(rest, k_left - 1):
                acc.append(district)
                carve(rest, k_left - 1, acc)
                acc.pop()

    carve(frozenset(range(g.n_nodes)), k, [])
    plans.sort(key=lambda p: p._key)
    return plans


# -- Complete Cut distribution (quotient-weighted spanning tree law) -------


def _district_blocks(plan: Plan) -> list[np.ndarray]:
    return [plan.district_nodes(d) for d in range(plan.k)]


def plan_weight(g: Graph, plan: Plan) -> int:
    """ST(G/P) times the product of district spanning-tree counts."""
    from treecut.graph_core import quotient_multigraph

    blocks = _district_blocks(plan)
    w = spanning_tree_count(quotient_multigraph(g, blocks))
    for nodes in blocks:
        w *= spanning_tree_count(induced_subgraph(g, nodes))
    return w


def complete_cut_distribution(g: Graph, k: int) -> ExactDistribution:
    """Exact law of the Complete Cut sampler: prob proportional to plan_weight."""
    if g.total_pop % k != 0:
        raise ValueError("total population must be divisible by k")
    plans = enumerate_plans(g, k, 0)
    if not plans:
        raise ValueError("no valid plans exist")
    weights = [plan_weight(g, p) for p in plans]
    total = sum(weights)
    return ExactDistribution(tuple(plans), tuple(Fraction(w, total) for w in weights))


# -- splitting orders -------------------------------------------------------


@dataclass(frozen=True)
class SplittingOrder:
    """Canonical hierarchy of refinements of a set of district indices.

    Leaves are singletons; every internal node carries its split as children
    (at least two, each a connected union of districts), sorted by smallest
    member so that equal hierarchies compare equal.
    """

    index_set: frozenset[int]
    children: tuple["SplittingOrder", ...]

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def splits(self) -> list[tuple[frozenset[int], ...]]:
        """One entry per internal node: the tuple of child index sets."""
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.children:
                out.append(tuple(c.index_set for c in node.children))
                stack.extend(node.children)
        return out

    def collections(self) -> list[frozenset[int]]:
        """Index sets of all non-root nodes (the pieces produced by splits)."""
        out = []
        stack = list(self.children)
        while stack:
            node = stack.pop()
            out.append(node.index_set)
            stack.extend(node.children)
        return out

    def canonical(self) -> "SplittingOrder":
        kids = tuple(
            sorted((c.canonical() for c in self.children), key=lambda c: min(c.index_set))
        )
        return SplittingOrder(self.index_set, kids)


def _set_partitions(elems: list[int]):
    """All partitions of elems into unordered nonempty parts."""
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield [[first]] + part


def district_edge_matrix(g: Graph, plan: Plan) -> np.ndarray:
    """e_ij: number of graph edges between districts i and j."""
    k = plan.k
    a = plan.assignment
    eu = a[g.edges[:, 0]]
    ev = a[g.edges[:, 1]]
    cross = eu != ev
    mat = np.zeros((k, k), np.int64)
    np.add.at(mat, (eu[cross], ev[cross]), 1)
    np.add.at(mat, (ev[cross], eu[cross]), 1)
    return mat


def _part_connected(part: Iterable[int], eij: np.ndarray) -> bool:
    part = list(part)
    if len(part) == 1:
        return True
    seen = {part[0]}
    stack = [part[0]]
    members = set(part)
    while stack:
        i = stack.pop()
        for j in members:
            if j not in seen and eij[i, j] > 0:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(members)


def enumerate_splitting_orders(g: Graph, plan: Plan) -> list[SplittingOrder]:
    """All canonical splitting-order hierarchies for the plan's district set."""
    eij = district_edge_matrix(g, plan)
    memo: dict[frozenset[int], list[SplittingOrder]] = {}

    def orders_of(s: frozenset[int]) -> list[SplittingOrder]:
        if len(s) == 1:
            return [SplittingOrder(s, ())]
        if s in memo:
            return memo[s]
        out = []
        for parts in _set_partitions(sorted(s)):
            if len(parts) < 2:
                continue
            if not all(_part_connected(p, eij) for p in parts):
                continue
            child_choices = [orders_of(frozenset(p)) for p in parts]
            for combo in _product(child_choices):
                kids = tuple(sorted(combo, key=lambda c: min(c.index_set)))
                out.append(SplittingOrder(s, kids))
        memo[s] = out
        return out

    return orders_of(frozenset(range(plan.k)))


def _product(choices: Sequence[Sequence]):
    if not choices:
        yield ()
        return
    for head in choices[0]:
        for tail in _product(choices[1:]):
            yield (head,) + tail


# -- split counts and splittability ----------------------------------------


def split_tree_count(g: Graph, plan: Plan, split: Sequence[Iterable[int]]) -> int:
    """C(A): spanning trees of the quotient multigraph of a split into district groups."""
    eij = district_edge_matrix(g, plan)
    parts = [sorted(p) for p in split]
    l = len(parts)
    mult = np.zeros((l, l), np.int64)
    for x in range(l):
        for y in range(x + 1, l):
            m = int(sum(eij[i, j] for i in parts[x] for j in parts[y]))
            mult[x, y] = m
            mult[y, x] = m
    return spanning_tree_count(MultiGraph(mult))


def _tree_is_splittable(sub: Graph, tree_edge_idx: frozenset[int], num: int, den: int) -> bool:
    idx = np.fromiter(tree_edge_idx, np.int64, len(tree_edge_idx))
    tu = sub.edges[idx, 0]
    tv = sub.edges[idx, 1]
    parent = _kernels.root_tree(tu, tv, sub.n_nodes, 0)
    below = _kernels.below_pops(parent, sub.pops)
    for u in range(sub.n_nodes):
        if parent[u] >= 0 and (int(below[u]) * den) % num == 0:
            return True
    return False


def splittability_counts(
    g: Graph,
    plan: Plan,
    collection: Iterable[int],
    ideal,
    *,
    guard: int = 1_000_000,
) -> tuple[int, int]:
    """(ST0, ST+) over the spanning trees of a union of districts.

    ST0 counts trees with no edge separating a positive integer multiple of
    ideal; ST+ is the rest. Raises when ST+ is zero (the collection cannot
    appear in any valid splitting order).
    """
    ideal = _as_fraction(ideal)
    nodes = np.concatenate([plan.district_nodes(d) for d in sorted(set(collection))])
    sub = induced_subgraph(g, nodes)
    if not sub.is_connected():
        raise GraphError("union of the collection's districts is disconnected")
    st0, stp = _splittability_raw(sub, ideal, guard)
    if stp == 0:
        raise ValueError("collection has no splittable spanning tree")
    return st0, stp


def _splittability_raw(sub: Graph, ideal: Fraction, guard: int) -> tuple[int, int]:
    num, den = ideal.numerator, ideal.denominator
    st0 = 0
    stp = 0
    if sub.n_nodes == 1:
        return 1, 0
    for tree in enumerate_spanning_trees(sub, guard=guard):
        if _tree_is_splittable(sub, tree, num, den):
            stp += 1
        else:
            st0 += 1
    return st0, stp


# -- the simultaneous-cut sampling law (sum over splitting orders) ----------


class _PlanOracleCache:
    """Per-plan cache of ST0/ST+/ST and C(A) values keyed by district index sets."""

    def __init__(self, g: Graph, plan: Plan, guard: int):
        self.g = g
        self.plan = plan
        self.guard = guard
        self.ideal = g.ideal_pop(plan.k)
        self.eij = district_edge_matrix(g, plan)
        self._st: dict[frozenset[int], tuple[int, int]] = {}
        self._c: dict[tuple[frozenset[int], ...], int] = {}

    def st_counts(self, s: frozenset[int]) -> tuple[int, int]:
        if s not in self._st:
            nodes = np.concatenate([self.plan.district_nodes(d) for d in sorted(s)])
            sub = induced_subgraph(self.g, nodes)
            self._st[s] = _splittability_raw(sub, self.ideal, self.guard)
        return self._st[s]

    def st0(self, s: frozenset[int]) -> int:
        return self.st_counts(s)[0]

    def stp(self, s: frozenset[int]) -> int:
        return self.st_counts(s)[1]

    def st_total(self, s: frozenset[int]) -> int:
        st0, stp = self.st_counts(s)
        return st0 + stp

    def cut_count(self, split: tuple[frozenset[int], ...]) -> int:
        key = tuple(sorted(split, key=min))
        if key not in self._c:
            self._c[key] = split_tree_count(self.g, self.plan, [sorted(p) for p in key])
        return self._c[key]


def splitting_order_probability(
    g: Graph, plan: Plan, order: SplittingOrder, *, guard: int = 1_000_000, _cache=None
) -> Fraction:
    """P(plan and this splitting order) by multiplying per-split probabilities.

    Each internal node contributes [prod over children ST0] * C(A) / ST+(node);
    ST0 of a singleton is its district's total tree count.
    """
    cache = _cache or _PlanOracleCache(g, plan, guard)
    prob = Fraction(1)
    stack = [order]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            continue
        split = tuple(c.index_set for c in node.children)
        num = cache.cut_count(split)
        for child in node.children:
            num *= cache.st0(child.index_set)
            stack.append(child)
        prob *= Fraction(num, cache.stp(node.index_set))
    return prob


def algorithm2_order_term(
    g: Graph, plan: Plan, order: SplittingOrder, *, guard: int = 1_000_000, _cache=None
) -> Fraction:
    """The closed-form term for one splitting order:

    [prod_i ST({i}) / ST+(root)] * prod_splits C(A) * prod_collections Omega(S).
    """
    cache = _cache or _PlanOracleCache(g, plan, guard)
    full = frozenset(range(plan.k))
    term = Fraction(1, cache.stp(full))
    for i in range(plan.k):
        term *= cache.st_total(frozenset([i]))
    for split in order.splits():
        term *= cache.cut_count(split)
    for s in order.collections():
        if len(s) > 1:
            term *= Fraction(cache.st0(s), cache.stp(s))
    return term


def algorithm2_plan_probability(g: Graph, plan: Plan, *, guard: int = 1_000_000) -> Fraction:
    """Exact probability that the simultaneous-cut sampler returns this plan."""
    if plan.k == 1:
        return Fraction(1)
    cache = _PlanOracleCache(g, plan, guard)
    orders = enumerate_splitting_orders(g, plan)
    return sum(
        (algorithm2_order_term(g, plan, so, guard=guard, _cache=cache) for so in orders),
        Fraction(0),
    )


def algorithm2_distribution(g: Graph, k: int, *, guard: int = 1_000_000) -> ExactDistribution:
    """Exact law of the simultaneous-cut sampler over all valid plans (exact balance)."""
    if g.total_pop % k != 0:
        raise ValueError("total population must be divisible by k")
    plans = enumerate_plans(g, k, 0)
    if not plans:
        raise ValueError("no valid plans exist")
    probs = [algorithm2_plan_probability(g, p, guard=guard) for p in plans]
    return ExactDistribution(tuple(plans), tuple(probs))


# -- distribution distance ---------------------------------------------------


def empirical_distribution(plans: Iterable[Plan]) -> dict[Plan, Fraction]:
    """Exact empirical frequencies (counts over total) of a sample of plans."""
    counts: dict[Plan, int] = {}
    total = 0
    for p in plans:
        counts[p] = counts.get(p, 0) + 1
        total += 1
    if total == 0:
        raise ValueError("empty sample")
    return {p: Fraction(c, total) for p, c in counts.items()}


def tv_distance(empirical: Mapping[Plan, Fraction | float], exact) -> Fraction | float:
    """Total-variation distance: half the L1 gap over the union of supports."""
    if isinstance(exact, ExactDistribution):
        exact = exact.as_dict()
    keys = set(empirical) | set(exact)
    diffs = [abs(empirical.get(p, 0) - exact.get(p, 0)) for p in keys]
    total = sum(diffs)
    return total / 2
