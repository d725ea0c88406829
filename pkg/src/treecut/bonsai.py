"""Independent plan samplers: Complete Cut, simultaneous cut, and the Bonsai recursion.

All samplers draw spanning trees of the current piece, cut population-valid
edges, and recurse on the pieces. Backtracking is governed by two caps:
max_trees redraws per piece before the piece fails upward, and max_fails
downstream failures before a split is abandoned; a global cap on total tree
draws turns deterministic dead ends into a reported error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from treecut import _kernels
from treecut.graph_core import Graph, Plan, _as_fraction, induced_subgraph
from treecut.trees import (
    CutTriple,
    SpanningTree,
    _wilson_parent,
    components_after_cuts,
    random_weight_mst,
    resolve_phi,
    split_tree,
    valid_cut_triples,
    wilson_ust,
)

BEST_RULES = ("most_balanced", "uniform_random")
TREE_SOURCES = ("uniform", "minimum")


class SamplerStuckError(RuntimeError):
    """The sampler exhausted its attempt budget without producing a plan."""


@dataclass(frozen=True)
class BonsaiParams:
    """Tuning knobs for the Bonsai and simultaneous-cut samplers.

    phi is a named tolerance multiplier ("one" for the strict delta <= eps,
    "identity" for the loose delta <= k_i * eps) or any callable n -> [1, n].
    max_trees=10 and max_fails=3 are reasonable defaults for real problems.
    """

    epsilon: Fraction = Fraction(0)
    phi: object = "one"
    best_rule: str = "most_balanced"
    max_trees: int = 10
    max_fails: int = 3
    tree_source: str = "uniform"
    global_attempt_cap: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _as_fraction(self.epsilon))
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.best_rule not in BEST_RULES:
            raise ValueError(f"best_rule must be one of {BEST_RULES}")
        if self.tree_source not in TREE_SOURCES:
            raise ValueError(f"tree_source must be one of {TREE_SOURCES}")
        if self.max_trees < 1 or self.max_fails < 1 or self.global_attempt_cap < 1:
            raise ValueError("max_trees, max_fails and global_attempt_cap must be positive")
        resolve_phi(self.phi)


@dataclass
class SampleTrace:
    """Diagnostics for one Bonsai sample."""

    trees_drawn: int = 0
    backtracks: int = 0
    splits_recorded: list[tuple[int, CutTriple]] = field(default_factory=list)


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, cap: int):
        self.remaining = cap

    def spend(self):
        self.remaining -= 1
        if self.remaining < 0:
            raise SamplerStuckError("sampler stuck: global tree-draw cap exhausted")


def _drawer(tree_source: str):
    if tree_source == "uniform":
        return wilson_ust
    if tree_source == "minimum":
        return random_weight_mst
    raise ValueError(f"unknown tree source {tree_source!r}")


def best_triple(triples, rule: str, rng: np.random.Generator) -> CutTriple:
    """Pick the winning cut triple.

    most_balanced: among triples minimizing |k1 - k2|, minimize max(delta1,
    delta2), breaking ties uniformly at random. uniform_random: uniform over
    all triples.
    """
    seq = list(triples)
    if not seq:
        raise ValueError("no cut triples to choose from")
    if rule == "uniform_random":
        return seq[int(rng.integers(len(seq)))]
    if rule != "most_balanced":
        raise ValueError(f"unknown best rule {rule!r}")
    spread = min(abs(tr.k1 - tr.k2) for tr in seq)
    seq = [tr for tr in seq if abs(tr.k1 - tr.k2) == spread]
    worst = min(tr.max_delta for tr in seq)
    seq = [tr for tr in seq if tr.max_delta == worst]
    if len(seq) == 1:
        return seq[0]
    return seq[int(rng.integers(len(seq)))]


# -- Complete Cut ------------------------------------------------------------


def _exact_cut_children(t: SpanningTree, k: int) -> np.ndarray:
    """Children of edges whose below-pop is a positive multiple of total/k."""
    total = t.total_pop
    below = t.below if total * k < 2**62 else t.below.astype(object)
    mask = (t.parent >= 0) & ((below * k) % total == 0)
    return np.flatnonzero(mask)


def complete_cut(g: Graph, k: int, rng: np.random.Generator, max_attempts: int = 100_000) -> Plan:
    """Draw uniform spanning trees until one has exactly k-1 valid cut edges.

    Removing those edges yields the plan; every district population equals the
    ideal exactly (epsilon = 0).
    """
    if g.total_pop % k != 0:
        raise ValueError("total population must be divisible by k")
    for _ in range(max_attempts):
        t = wilson_ust(g, rng)
        cut = _exact_cut_children(t, k)
        if cut.size == k - 1:
            pieces = components_after_cuts(t, cut)
            return Plan.from_node_sets(g, pieces, 0)
    raise SamplerStuckError(f"no completely cuttable tree found in {max_attempts} attempts")


@dataclass(frozen=True)
class CuttabilityReport:
    pct_cuttable: float
    max_valid_edges: int
    trees_at_max: int
    histogram: dict[int, int]


def cuttability_experiment(
    g: Graph, k: int, num_trees: int, rng: np.random.Generator
) -> CuttabilityReport:
    """Count valid cut edges over many uniform spanning trees.

    Reports the percentage of completely cuttable trees (exactly k-1 valid
    edges), the maximum valid-edge count seen, and how many trees attained it.
    """
    if g.total_pop % k != 0:
        raise ValueError("total population must be divisible by k")
    total = g.total_pop
    hist = np.zeros(k, np.int64)
    for _ in range(num_trees):
        parent = _wilson_parent(g, rng)
        below = _kernels.below_pops(parent, g.pops)
        c = _kernels.count_exact_multiples(below, parent, k, total)
        hist[c] += 1
    max_edges = int(np.flatnonzero(hist)[-1])
    return CuttabilityReport(
        pct_cuttable=100.0 * float(hist[k - 1]) / num_trees,
        max_valid_edges=max_edges,
        trees_at_max=int(hist[max_edges]),
        histogram={int(c): int(n) for c, n in enumerate(hist) if n},
    )


# -- simultaneous cut (exact balance, multi-way cuts per tree) ---------------


def simultaneous_cut_sample(
    g: Graph, k: int, rng: np.random.Generator, params: BonsaiParams | None = None
) -> Plan:
    """Make all possible cuts of each drawn tree at once; recurse on the pieces.

    Exact balance only. Pieces with the ideal population become districts;
    every other piece draws fresh trees until one has a valid cut edge.
    """
    params = params or BonsaiParams()
    if params.epsilon != 0:
        raise ValueError("simultaneous cuts require epsilon = 0")
    if g.total_pop % k != 0:
        raise ValueError("total population must be divisible by k")
    ideal = g.total_pop // k
    draw = _drawer(params.tree_source)
    budget = _Budget(params.global_attempt_cap)

    def gen(piece: Graph):
        if piece.total_pop == ideal:
            return [piece.ids]
        draws = 0
        fails = 0
        while True:
            if draws >= params.max_trees:
                return None
            t = draw(piece, rng)
            draws += 1
            budget.spend()
            k_piece = piece.total_pop // ideal
            cut = _exact_cut_children(t, k_piece)
            if cut.size == 0:
                continue
            draws = 0
            districts = []
            failed = False
            for comp in components_after_cuts(t, cut):
                r = gen(induced_subgraph(piece, comp))
                if r is None:
                    failed = True
                    break
                districts.extend(r)
            if not failed:
                return districts
            fails += 1
            if fails >= params.max_fails:
                return None

    while True:
        districts = gen(g)
        if districts is not None:
            return _plan_from_id_groups(g, districts, 0)


def _plan_from_id_groups(g: Graph, groups, epsilon) -> Plan:
    assign = np.full(g.n_nodes, -1, np.int64)
    for d, ids in enumerate(groups):
        for nid in ids:
            assign[g.index(nid)] = d
    return Plan(g, assign, len(groups), epsilon)


# -- Bonsai -------------------------------------------------------------------


def _round_to_int(x: Fraction) -> int:
    return int((2 * x + 1) // 2)


def bonsai_sample(
    g: Graph, k: int, rng: np.random.Generator, params: BonsaiParams | None = None
) -> tuple[Plan, SampleTrace]:
    """One independent plan: split pieces one valid triple at a time, keeping subtrees.

    The tree drawn for a piece is reused after each cut (the two induced
    subtrees seed the child pieces), which at exact balance makes this sampler
    equivalent to the simultaneous-cut one.
    """
    params = params or BonsaiParams()
    eps = params.epsilon
    if k < 1:
        raise ValueError("k must be positive")
    if eps == 0 and g.total_pop % k != 0:
        raise ValueError("total population must be divisible by k when epsilon = 0")
    ideal = g.ideal_pop(k)
    draw = _drawer(params.tree_source)
    budget = _Budget(params.global_attempt_cap)
    trace = SampleTrace()
    check_rounding = params.phi == "one" and eps < Fraction(1, 4)

    def draw_tree(piece: Graph) -> SpanningTree:
        t = draw(piece, rng)
        trace.trees_drawn += 1
        budget.spend()
        return t

    def gen(t: SpanningTree, k_piece: int):
        piece = t.host
        if k_piece == 1:
            return [piece.ids]
        draws = 0
        fails = 0
        while True:
            triples = valid_cut_triples(t, ideal, k_piece, eps, params.phi)
            if not triples:
                if draws >= params.max_trees:
                    return None
                t = draw_tree(piece)
                draws += 1
                continue
            chosen = best_triple(triples, params.best_rule, rng)
            if check_rounding:
                below = Fraction(int(t.below[chosen.child]))
                if chosen.k1 != _round_to_int(below / ideal) or chosen.k2 != k_piece - chosen.k1:
                    raise RuntimeError("district-count bookkeeping disagrees with rounding rule")
            t1, t2 = split_tree(t, chosen.edge)
            trace.splits_recorded.append((piece.n_nodes, chosen))
            r1 = gen(t1, chosen.k1)
            r2 = gen(t2, chosen.k2) if r1 is not None else None
            if r1 is not None and r2 is not None:
                return r1 + r2
            trace.backtracks += 1
            fails += 1
            if fails >= params.max_fails:
                return None
            draws = 1
            t = draw_tree(piece)

    while True:
        districts = gen(draw_tree(g), k)
        if districts is not None:
            return _plan_from_id_groups(g, districts, eps), trace
