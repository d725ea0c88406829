"""One test per acceptance criterion, at the stated tolerances.

Each test prints a single PASS line; run with -s to see them inline. The
heavyweight statistical criteria are also marked slow.
"""

from fractions import Fraction

import numpy as np
import pytest

from treecut import (
    BonsaiParams,
    RECOM_VARIANTS,
    SamplerStuckError,
    algorithm2_distribution,
    bonsai_sample,
    build_grid,
    complete_cut,
    complete_cut_distribution,
    cut_edges,
    cuttability_experiment,
    empirical_distribution,
    enumerate_plans,
    enumerate_splitting_orders,
    make_graph,
    recom_chain,
    simultaneous_cut_sample,
    tv_distance,
)
from treecut.cli import RunConfig, run
from treecut.oracle import (
    _PlanOracleCache,
    algorithm2_order_term,
    splitting_order_probability,
)

from conftest import unbalanced_path

pytestmark = pytest.mark.acceptance


def _report(line):
    print(f"\nACCEPTANCE PASS: {line}")


@pytest.fixture(scope="module")
def grid33m():
    return build_grid(3, 3)


@pytest.fixture(scope="module")
def alg2_dist_3x3(grid33m):
    return algorithm2_distribution(grid33m, 3)


@pytest.fixture(scope="module")
def alg2_samples_3x3(grid33m):
    return [
        simultaneous_cut_sample(grid33m, 3, np.random.default_rng([101, i]))
        for i in range(200_000)
    ]


# 1. cuttability statistics, 7x7 grid into 7 (scaled reference counts)


def test_cuttability_stats_7x7():
    g = build_grid(7, 7)
    report = cuttability_experiment(g, 7, 100_000, np.random.default_rng([1, 0]))
    assert 1.58 - 0.25 <= report.pct_cuttable <= 1.58 + 0.25
    assert report.max_valid_edges == 6
    _report(
        f"cuttability on 7x7/k=7, 1e5 trees: {report.pct_cuttable:.3f}% completely cuttable "
        f"(reference 1.58 +/- 0.25), max valid cut edges {report.max_valid_edges} (= 6)"
    )


# 2. cuttability statistics, 50x50 grid into 5 (scaled reference counts)


@pytest.mark.slow
def test_cuttability_stats_50x50():
    g = build_grid(50, 50)
    report = cuttability_experiment(g, 5, 100_000, np.random.default_rng([2, 0]))
    cuttable = report.histogram.get(4, 0)
    assert 2 <= cuttable <= 40
    assert report.max_valid_edges == 4
    _report(
        f"cuttability on 50x50/k=5, 1e5 trees: {cuttable} completely cuttable (in [2, 40]), "
        f"max valid cut edges {report.max_valid_edges} (= 4, attained)"
    )


# 3. Complete Cut matches its exact quotient-weighted law


def test_complete_cut_matches_exact_law_2x3():
    g = build_grid(2, 3)
    dist = complete_cut_distribution(g, 3)
    assert sorted(dist.probs) == [Fraction(4, 14), Fraction(5, 14), Fraction(5, 14)]
    samples = [complete_cut(g, 3, np.random.default_rng([102, i])) for i in range(200_000)]
    tv = float(tv_distance(empirical_distribution(samples), dist))
    assert tv < 0.01
    _report(
        f"complete cut on 2x3/k=3: exact law (4/14, 5/14, 5/14); TV over 2e5 samples "
        f"{tv:.4f} < 0.01"
    )


@pytest.mark.slow
def test_complete_cut_matches_exact_law_3x3(grid33m):
    dist = complete_cut_distribution(grid33m, 3)
    samples = [complete_cut(grid33m, 3, np.random.default_rng([103, i])) for i in range(200_000)]
    tv = float(tv_distance(empirical_distribution(samples), dist))
    assert tv < 0.02
    _report(f"complete cut on 3x3/k=3: TV over 2e5 samples {tv:.4f} < 0.02")


# 4. exact law of the simultaneous-cut sampler (splitting-order formula)


@pytest.mark.slow
def test_simultaneous_cut_exact_law(grid33m, alg2_dist_3x3, alg2_samples_3x3):
    g23 = build_grid(2, 3)
    for g, dist in ((g23, algorithm2_distribution(g23, 3)), (grid33m, alg2_dist_3x3)):
        assert sum(dist.probs, Fraction(0)) == 1
        for plan in dist.support:
            cache = _PlanOracleCache(g, plan, 1_000_000)
            for order in enumerate_splitting_orders(g, plan):
                formula = algorithm2_order_term(g, plan, order, _cache=cache)
                direct = splitting_order_probability(g, plan, order, _cache=cache)
                assert formula == direct
    samples23 = [
        simultaneous_cut_sample(g23, 3, np.random.default_rng([104, i])) for i in range(200_000)
    ]
    tv23 = float(tv_distance(empirical_distribution(samples23), algorithm2_distribution(g23, 3)))
    tv33 = float(tv_distance(empirical_distribution(alg2_samples_3x3), alg2_dist_3x3))
    assert tv23 < 0.02 and tv33 < 0.02
    _report(
        "simultaneous-cut law: exact sum 1 and per-order term equality on 2x3 and 3x3; "
        f"TV vs 2e5 draws: 2x3 {tv23:.4f}, 3x3 {tv33:.4f} (< 0.02)"
    )


# 5. one-cut-at-a-time sampler equals the simultaneous sampler at eps = 0


@pytest.mark.slow
def test_bonsai_equals_simultaneous_at_eps0(grid33m, alg2_samples_3x3):
    bonsai_samples = [
        bonsai_sample(grid33m, 3, np.random.default_rng([105, i]))[0] for i in range(200_000)
    ]
    tv = float(
        tv_distance(empirical_distribution(bonsai_samples), empirical_distribution(alg2_samples_3x3))
    )
    assert tv < 0.02
    _report(f"bonsai vs simultaneous cut at eps=0 on 3x3/k=3: empirical TV {tv:.4f} < 0.02")


# 6. full support under the loose multiplier and uniform-random best rule


@pytest.mark.slow
def test_full_support_3x3(grid33m):
    expected = set(enumerate_plans(grid33m, 3, 0))
    params = BonsaiParams(phi="identity", best_rule="uniform_random")
    seen = set()
    drawn = 0
    for i in range(1_000_000):
        plan, _ = bonsai_sample(grid33m, 3, np.random.default_rng([106, i]), params)
        seen.add(plan)
        drawn = i + 1
        if expected <= seen:
            break
    assert expected <= seen
    _report(
        f"full support on 3x3/k=3: all {len(expected)} plans appeared within 1e6 samples "
        f"(covered after {drawn})"
    )


@pytest.mark.slow
def test_full_support_2x4_eps025():
    g = build_grid(2, 4)
    expected = set(enumerate_plans(g, 4, Fraction(1, 4)))
    params = BonsaiParams(epsilon=Fraction(1, 4), phi="identity", best_rule="uniform_random")
    seen = set()
    drawn = 0
    for i in range(1_000_000):
        plan, _ = bonsai_sample(g, 4, np.random.default_rng([107, i]), params)
        seen.add(plan)
        drawn = i + 1
        if expected <= seen:
            break
    assert expected <= seen
    _report(
        f"full support on 2x4/k=4 (eps=0.25, identity multiplier, uniform best): "
        f"all {len(expected)} plans appeared within 1e6 samples (covered after {drawn})"
    )


# 7. the unbalanced 20-node path: strict rule wedges, loose rule succeeds


def test_unbalanced_path_failure_mode():
    g = unbalanced_path()
    plans = enumerate_plans(g, 20, Fraction(1, 10))
    assert len(plans) == 1
    singleton = plans[0]
    strict = BonsaiParams(epsilon=Fraction(1, 10), phi="one", best_rule="most_balanced")
    with pytest.raises(SamplerStuckError):
        bonsai_sample(g, 20, np.random.default_rng([108, 0]), strict)
    loose = BonsaiParams(epsilon=Fraction(1, 10), phi="identity", best_rule="uniform_random")
    hits = 0
    for i in range(50):
        try:
            plan, _ = bonsai_sample(g, 20, np.random.default_rng([109, i]), loose)
        except SamplerStuckError:
            continue
        assert plan == singleton
        hits += 1
    assert hits > 0
    _report(
        f"unbalanced 20-node path: strict most-balanced rule exhausts the cap; loose rule "
        f"returned the unique all-singletons plan {hits}/50 times"
    )


# 8. ensemble mean cut edges: bonsai strictly between the two pair-selection variants


@pytest.mark.slow
def test_ensemble_mean_ordering_7x7():
    g = build_grid(7, 7)
    n = 10_000

    def mean_cuts(plans):
        return float(np.mean([cut_edges(g, p) for p in plans]))

    bonsai_by_source = {}
    for src, key in (("uniform", 110), ("minimum", 111)):
        plans = [
            bonsai_sample(g, 7, np.random.default_rng([key, i]), BonsaiParams(tree_source=src))[0]
            for i in range(n)
        ]
        bonsai_by_source[src] = mean_cuts(plans)
    chain_means = {}
    for offset, name in enumerate(RECOM_VARIANTS):
        chain = recom_chain(
            g, 7, RECOM_VARIANTS[name], 0, steps=n, rng=np.random.default_rng([112, offset])
        )
        chain_means[name] = mean_cuts(chain)
    for src, lo_name, hi_name in (("minimum", "recom-a", "recom-b"), ("uniform", "recom-c", "recom-d")):
        lo, hi = sorted((chain_means[lo_name], chain_means[hi_name]))
        assert lo < bonsai_by_source[src] < hi, (src, lo, bonsai_by_source[src], hi)
    _report(
        "mean cut edges on 7x7/k=7 (1e4 plans per method): "
        f"bonsai-minimum {bonsai_by_source['minimum']:.2f} between recom-a "
        f"{chain_means['recom-a']:.2f} and recom-b {chain_means['recom-b']:.2f}; "
        f"bonsai-uniform {bonsai_by_source['uniform']:.2f} between recom-c "
        f"{chain_means['recom-c']:.2f} and recom-d {chain_means['recom-d']:.2f}"
    )


# 9. validity suites


@pytest.mark.slow
def test_validity_suite_50x50():
    g = build_grid(50, 50)
    ideal = g.total_pop // 10
    for i in range(10_000):
        plan, _ = bonsai_sample(g, 10, np.random.default_rng([113, i]))
        assert plan.k == 10
        pops = plan.district_pops()
        assert all(p == ideal for p in pops)
    _report("validity on 50x50/k=10 at eps=0: 1e4 plans pass connectivity, exact balance, k")


def test_validity_suite_20x20_random_pops():
    base = build_grid(20, 20)
    pops = np.random.default_rng(77).integers(80, 121, size=400)
    g = make_graph(
        [(nid, int(p)) for nid, p in zip(base.ids, pops)],
        [(base.ids[int(u)], base.ids[int(v)]) for u, v in base.edges],
    )
    eps = Fraction(1, 100)
    params = BonsaiParams(epsilon=eps)
    ideal = g.ideal_pop(4)
    lo, hi = (1 - eps) * ideal, (1 + eps) * ideal
    for i in range(10_000):
        plan, _ = bonsai_sample(g, 4, np.random.default_rng([114, i]), params)
        assert plan.k == 4
        for pop in plan.district_pops():
            assert lo <= pop <= hi
    _report(
        "validity on randomized-pop 20x20/k=4 at eps=0.01: 1e4 plans satisfy non-strict "
        "bounds with district-count bookkeeping agreeing with the rounding rule"
    )


# 10. determinism across worker counts


def test_determinism_across_workers(tmp_path):
    outputs = []
    for workers in (1, 4):
        out = tmp_path / f"w{workers}"
        cfg = RunConfig(
            method="bonsai", grid="7x7", k=7, num_plans=60, seed=31, workers=workers, out=str(out)
        )
        assert run(cfg) == 0
        outputs.append((out / "plans.jsonl").read_bytes())
        outputs.append((out / "cut_edges.csv").read_bytes())
        outputs.append((out / "summary.json").read_bytes())
    assert outputs[0] == outputs[3]
    assert outputs[1] == outputs[4]
    assert outputs[2] == outputs[5]
    _report("determinism: --workers 1 and 4 produced byte-identical plan and metric files")
