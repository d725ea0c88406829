"""treecut: independent sampling of connected, population-balanced graph partitions.

The package draws district plans one at a time by cutting random spanning
trees (Complete Cut, simultaneous cut, Bonsai), provides ReCom Markov-chain
baselines for comparison, and ships an exact-distribution oracle that checks
the samplers against closed-form laws on small instances.
"""

from treecut.graph_core import (
    Graph,
    GraphError,
    MultiGraph,
    Plan,
    PlanError,
    build_grid,
    enumerate_spanning_trees,
    induced_subgraph,
    load_graph,
    make_graph,
    quotient_multigraph,
    spanning_tree_count,
)
from treecut.trees import (
    CutTriple,
    SpanningTree,
    random_weight_mst,
    split_tree,
    valid_cut_edges_exact,
    valid_cut_triples,
    wilson_ust,
)
from treecut.bonsai import (
    BonsaiParams,
    SampleTrace,
    SamplerStuckError,
    best_triple,
    bonsai_sample,
    complete_cut,
    cuttability_experiment,
    simultaneous_cut_sample,
)
from treecut.recom import RECOM_VARIANTS, ChainStuckError, RecomVariant, recom_chain, recom_step
from treecut.oracle import (
    ExactDistribution,
    SplittingOrder,
    algorithm2_distribution,
    complete_cut_distribution,
    empirical_distribution,
    enumerate_plans,
    enumerate_splitting_orders,
    split_tree_count,
    splittability_counts,
    tv_distance,
)
from treecut.analytics import (
    EnsembleSummary,
    cut_edges,
    district_perimeters,
    ordered_vote_shares,
    summarize_ensemble,
)

__version__ = "0.1.0"
