"""ReCom Markov-chain baselines: merge two adjacent districts, re-split via a tree.

The four variants pair a tree source (minimum = random-weight Kruskal,
uniform = Wilson) with a district-pair selection rule (uniform over plan-wide
cut edges, or uniform over adjacent district pairs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from treecut import _kernels
from treecut.bonsai import BonsaiParams, bonsai_sample, _drawer
from treecut.graph_core import Graph, Plan, _as_fraction, induced_subgraph


class ChainStuckError(RuntimeError):
    """No balanced re-split was found for any district pair."""


@dataclass(frozen=True)
class RecomVariant:
    tree_source: str  # "minimum" | "uniform"
    pair_rule: str  # "cut_edge" | "district_pair"


RECOM_VARIANTS = {
    "recom-a": RecomVariant("minimum", "cut_edge"),
    "recom-b": RecomVariant("minimum", "district_pair"),
    "recom-c": RecomVariant("uniform", "cut_edge"),
    "recom-d": RecomVariant("uniform", "district_pair"),
}


def _select_pair(plan: Plan, g: Graph, pair_rule: str, rng: np.random.Generator) -> tuple[int, int]:
    """Adjacent district pair to merge, per the variant's selection rule."""
    a = plan.assignment
    du = a[g.edges[:, 0]]
    dv = a[g.edges[:, 1]]
    cross = np.flatnonzero(du != dv)
    if cross.size == 0:
        raise ChainStuckError("plan has no cut edges to recombine across")
    if pair_rule == "cut_edge":
        e = int(cross[rng.integers(cross.size)])
        x, y = int(du[e]), int(dv[e])
        return (x, y) if x < y else (y, x)
    if pair_rule == "district_pair":
        lo = np.minimum(du[cross], dv[cross])
        hi = np.maximum(du[cross], dv[cross])
        pairs = sorted(set(zip(lo.tolist(), hi.tolist())))
        return pairs[int(rng.integers(len(pairs)))]
    raise ValueError(f"unknown pair rule {pair_rule!r}")


def recom_step(
    plan: Plan,
    g: Graph,
    variant: RecomVariant,
    epsilon,
    rng: np.random.Generator,
    max_retries: int = 50,
) -> Plan:
    """One merge-and-resplit move; returns a new valid plan.

    The merged pair is re-split at a uniformly chosen tree edge whose two
    sides are both within epsilon of the ideal population; after max_retries
    trees without such an edge, a new pair is selected.
    """
    eps = _as_fraction(epsilon)
    ideal = g.ideal_pop(plan.k)
    num, den = ideal.numerator, ideal.denominator
    p, q = eps.numerator, eps.denominator
    draw = _drawer(variant.tree_source)
    pair_cap = 10 * plan.k * plan.k + 10
    for _ in range(pair_cap):
        da, db = _select_pair(plan, g, variant.pair_rule, rng)
        merged = np.flatnonzero((plan.assignment == da) | (plan.assignment == db))
        sub = induced_subgraph(g, merged)
        total = sub.total_pop
        for _ in range(max_retries):
            t = draw(sub, rng)
            below = t.below if (total * den + num) * q < 2**62 else t.below.astype(object)
            # both sides within eps of ideal: |pop*den - num| * q <= p * num
            ok = (
                (t.parent >= 0)
                & (np.abs(below * den - num) * q <= p * num)
                & (np.abs((total - below) * den - num) * q <= p * num)
            )
            valid = np.flatnonzero(ok)
            if valid.size == 0:
                continue
            child = int(valid[rng.integers(valid.size)])
            mask = _kernels.subtree_mask(t.parent, child)
            new_assign = plan.assignment.copy()
            new_assign[merged[mask]] = da
            new_assign[merged[~mask]] = db
            return Plan(g, new_assign, plan.k, eps)
    raise ChainStuckError(
        f"no balanced re-split found after {pair_cap} pair selections (degenerate instance)"
    )


def recom_chain(
    g: Graph,
    k: int,
    variant: RecomVariant,
    epsilon,
    steps: int,
    subsample: int = 1,
    seed_params: BonsaiParams | None = None,
    rng: np.random.Generator | None = None,
) -> list[Plan]:
    """Run a chain from a Bonsai seed plan, recording every subsample-th state."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if subsample < 1:
        raise ValueError("subsample must be at least 1")
    eps = _as_fraction(epsilon)
    if seed_params is None:
        seed_params = BonsaiParams(epsilon=eps, tree_source=variant.tree_source)
    plan, _ = bonsai_sample(g, k, rng, seed_params)
    out = []
    for step in range(1, steps + 1):
        plan = recom_step(plan, g, variant, eps, rng)
        if step % subsample == 0:
            out.append(plan)
    return out
