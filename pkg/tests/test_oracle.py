import itertools
from fractions import Fraction

import numpy as np
import pytest

from treecut import (
    Plan,
    algorithm2_distribution,
    build_grid,
    complete_cut_distribution,
    enumerate_plans,
    enumerate_spanning_trees,
    enumerate_splitting_orders,
    make_graph,
    quotient_multigraph,
    spanning_tree_count,
    splittability_counts,
    split_tree_count,
    tv_distance,
)
from treecut.graph_core import PlanError
from treecut.oracle import (
    _PlanOracleCache,
    algorithm2_order_term,
    district_edge_matrix,
    empirical_distribution,
    plan_weight,
    splitting_order_probability,
)

from conftest import unbalanced_path


def brute_force_plans(g, k, epsilon):
    """Independent oracle: filter all k^n assignments by the Plan validator."""
    found = set()
    for assign in itertools.product(range(k), repeat=g.n_nodes):
        try:
            found.add(Plan(g, list(assign), k, epsilon))
        except PlanError:
            continue
    return found


# -- enumerate_plans ---------------------------------------------------------


def test_enumerate_2x2(grid22):
    plans = enumerate_plans(grid22, 2, 0)
    assert len(plans) == 2  # rows and columns; diagonals are disconnected


def test_enumerate_2x3(grid23):
    assert len(enumerate_plans(grid23, 3, 0)) == 3  # the domino tilings


def test_enumerate_unbalanced_path_unique_plan():
    g = unbalanced_path()
    plans = enumerate_plans(g, 20, Fraction(1, 10))
    assert len(plans) == 1
    assert np.bincount(plans[0].assignment).tolist() == [1] * 20


@pytest.mark.parametrize(
    "rows,cols,k,eps",
    [(2, 2, 2, 0), (2, 3, 3, 0), (2, 3, 2, "1/3"), (3, 3, 3, 0), (2, 4, 4, "0.25")],
)
def test_enumerate_matches_brute_force(rows, cols, k, eps):
    g = build_grid(rows, cols, 1)
    plans = enumerate_plans(g, k, eps)
    assert len(set(plans)) == len(plans)
    assert set(plans) == brute_force_plans(g, k, eps)


def test_enumerate_guard():
    from treecut.graph_core import EnumerationLimitError

    with pytest.raises(EnumerationLimitError):
        enumerate_plans(build_grid(3, 3), 3, 0, max_states=5)


# -- complete_cut_distribution -------------------------------------------------


def test_prop1_2x2(grid22):
    dist = complete_cut_distribution(grid22, 2)
    assert sorted(dist.probs) == [Fraction(1, 2), Fraction(1, 2)]


def test_prop1_2x3(grid23):
    dist = complete_cut_distribution(grid23, 3)
    assert sorted(dist.probs) == [Fraction(4, 14), Fraction(5, 14), Fraction(5, 14)]
    vertical = Plan.from_node_sets(grid23, [[0, 3], [1, 4], [2, 5]], 0)
    assert dist.prob(vertical) == Fraction(4, 14)


def test_prop1_weights_equal_cuttable_tree_classification(grid23):
    """Each plan's weight equals the number of completely cuttable trees inducing it."""
    from treecut import _kernels

    k = 3
    ideal = grid23.total_pop // k
    counts = {}
    cuttable = 0
    for tree in enumerate_spanning_trees(grid23):
        idx = np.fromiter(tree, np.int64, len(tree))
        parent = _kernels.root_tree(grid23.edges[idx, 0], grid23.edges[idx, 1], 6, 0)
        below = _kernels.below_pops(parent, grid23.pops)
        cut = [u for u in range(6) if parent[u] >= 0 and below[u] % ideal == 0]
        if len(cut) == k - 1:
            cuttable += 1
            labels = np.empty(6, np.int64)
            mask = np.zeros(6, np.bool_)
            mask[cut] = True
            _kernels.cut_components(parent, mask, labels)
            plan = Plan(grid23, np.unique(labels, return_inverse=True)[1], k, 0)
            counts[plan] = counts.get(plan, 0) + 1
    assert cuttable == 14  # 14 of the 15 trees
    for plan, c in counts.items():
        assert plan_weight(grid23, plan) == c


# -- splitting orders ------------------------------------------------------------


def test_orders_k2(grid22):
    plan = Plan(grid22, [0, 0, 1, 1], 2, 0)
    assert len(enumerate_splitting_orders(grid22, plan)) == 1


def test_orders_triangle_adjacency(grid23):
    plan = Plan.from_node_sets(grid23, [[0, 1], [3, 4], [2, 5]], 0)
    eij = district_edge_matrix(grid23, plan)
    assert (eij > 0).sum() == 6  # all three pairs adjacent
    orders = enumerate_splitting_orders(grid23, plan)
    assert len(orders) == 4  # one ternary split plus three 2-then-1 hierarchies
    arities = sorted(len(o.children) for o in orders)
    assert arities == [2, 2, 2, 3]


def test_orders_path_adjacency(grid23):
    plan = Plan.from_node_sets(grid23, [[0, 3], [1, 4], [2, 5]], 0)
    eij = district_edge_matrix(grid23, plan)
    assert eij[0, 2] == 0
    orders = enumerate_splitting_orders(grid23, plan)
    assert len(orders) == 3  # {1,3} first is ruled out by connectivity


def test_orders_canonicalization_idempotent(grid33):
    for plan in enumerate_plans(grid33, 3, 0)[:4]:
        for order in enumerate_splitting_orders(grid33, plan):
            assert order.canonical() == order


# -- split counts and splittability -----------------------------------------------


def test_cut_count_pairwise_equals_eij(grid23):
    plan = Plan.from_node_sets(grid23, [[0, 1], [3, 4], [2, 5]], 0)
    eij = district_edge_matrix(grid23, plan)
    for i in range(3):
        for j in range(i + 1, 3):
            assert split_tree_count(grid23, plan, [[i], [j]]) == eij[i, j]


def test_cut_count_triangle_formula(grid23):
    plan = Plan.from_node_sets(grid23, [[0, 1], [3, 4], [2, 5]], 0)
    e = district_edge_matrix(grid23, plan)
    expect = e[0, 1] * e[0, 2] + e[0, 1] * e[1, 2] + e[0, 2] * e[1, 2]
    assert split_tree_count(grid23, plan, [[0], [1], [2]]) == expect


def test_cut_count_binary_boundary(grid33):
    plan = enumerate_plans(grid33, 3, 0)[0]
    e = district_edge_matrix(grid33, plan)
    m = int(e[0, 1] + e[0, 2])
    assert split_tree_count(grid33, plan, [[0], [1, 2]]) == m


def test_cut_count_matches_quotient(grid33):
    plan = enumerate_plans(grid33, 3, 0)[1]
    split = [[0], [1, 2]]
    blocks = [
        np.concatenate([plan.district_nodes(d) for d in part]) for part in split
    ]
    assert split_tree_count(grid33, plan, split) == spanning_tree_count(
        quotient_multigraph(grid33, blocks)
    )


def test_splittability_two_unit_nodes():
    g = make_graph([("a", 1), ("b", 1)], [("a", "b")])
    plan = Plan(g, [0, 1], 2, 0)
    assert splittability_counts(g, plan, [0, 1], 1) == (0, 1)


def test_splittability_path4(path4):
    plan = Plan(path4, [0, 0, 1, 1], 2, 0)
    assert splittability_counts(path4, plan, [0, 1], 2) == (0, 1)


def test_splittability_2x3_root(grid23):
    plan = Plan.from_node_sets(grid23, [[0, 3], [1, 4], [2, 5]], 0)
    assert splittability_counts(grid23, plan, [0, 1, 2], 2) == (1, 14)


def test_splittability_singleton_raises(grid23):
    plan = Plan.from_node_sets(grid23, [[0, 3], [1, 4], [2, 5]], 0)
    with pytest.raises(ValueError, match="no splittable"):
        splittability_counts(grid23, plan, [0], 2)


# -- algorithm2 distribution ---------------------------------------------------


def test_alg2_path4_point_mass(path4):
    dist = algorithm2_distribution(path4, 2)
    assert len(dist.support) == 1
    assert dist.probs == (Fraction(1),)


def test_oracles_handle_k1(grid22):
    assert algorithm2_distribution(grid22, 1).probs == (Fraction(1),)
    assert complete_cut_distribution(grid22, 1).probs == (Fraction(1),)
    with pytest.raises(ValueError, match="positive"):
        enumerate_plans(grid22, 0, 0)


def test_alg2_sums_to_one_2x3(grid23):
    dist = algorithm2_distribution(grid23, 3)
    assert sum(dist.probs, Fraction(0)) == 1
    assert all(p > 0 for p in dist.probs)


def test_alg2_terms_match_direct_recursion(grid23):
    for plan in enumerate_plans(grid23, 3, 0):
        cache = _PlanOracleCache(grid23, plan, 1_000_000)
        for order in enumerate_splitting_orders(grid23, plan):
            formula = algorithm2_order_term(grid23, plan, order, _cache=cache)
            direct = splitting_order_probability(grid23, plan, order, _cache=cache)
            assert formula == direct


def test_alg2_differs_from_prop1_on_3x3(grid33):
    a = algorithm2_distribution(grid33, 3)
    b = complete_cut_distribution(grid33, 3)
    assert set(a.support) == set(b.support)
    assert a.probs != b.probs


# -- tv_distance -----------------------------------------------------------------


def test_tv_identical(grid22):
    dist = complete_cut_distribution(grid22, 2)
    assert tv_distance(dist.as_dict(), dist) == 0


def test_tv_disjoint(grid22, grid23):
    d22 = complete_cut_distribution(grid22, 2)
    fake = {p: Fraction(1, 3) for p in enumerate_plans(grid23, 3, 0)}
    assert tv_distance(fake, d22) == 1


def test_tv_arithmetic(grid22):
    plans = enumerate_plans(grid22, 2, 0)
    exact = {plans[0]: Fraction(1, 2), plans[1]: Fraction(1, 2)}
    emp = {plans[0]: Fraction(3, 5), plans[1]: Fraction(2, 5)}
    assert tv_distance(emp, exact) == Fraction(1, 10)


def test_empirical_distribution_counts(grid22):
    plans = enumerate_plans(grid22, 2, 0)
    emp = empirical_distribution([plans[0], plans[0], plans[1], plans[0]])
    assert emp[plans[0]] == Fraction(3, 4)
    assert emp[plans[1]] == Fraction(1, 4)
