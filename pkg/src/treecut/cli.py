"""Command-line orchestration: build graphs, run samplers/chains/oracles, emit files.

Independent samplers derive the rng for plan i from (seed, i), so outputs are
byte-identical no matter how the work is spread across processes. Every flag
can also be supplied through a TREECUT_<NAME> environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from multiprocessing import Pool

import numpy as np

import treecut
from treecut.analytics import (
    cut_edges,
    district_perimeters,
    ordered_vote_shares,
    summarize_ensemble,
    write_cut_edges_csv,
    write_perimeters_csv,
    write_shares_csv,
    write_summary_json,
)
from treecut.bonsai import (
    BonsaiParams,
    bonsai_sample,
    complete_cut,
    cuttability_experiment,
    simultaneous_cut_sample,
)
from treecut.graph_core import Graph, Plan, PlanError, _as_fraction, build_grid, load_graph
from treecut.oracle import algorithm2_distribution, complete_cut_distribution
from treecut.recom import RECOM_VARIANTS, recom_chain

SAMPLER_METHODS = ("complete-cut", "bonsai", "alg2")
CHAIN_METHODS = tuple(RECOM_VARIANTS)
ORACLE_METHODS = ("oracle-prop1", "oracle-prop2")
ALL_METHODS = SAMPLER_METHODS + CHAIN_METHODS + ORACLE_METHODS + ("cuttability",)

_BEST_RULES = {"balanced": "most_balanced", "random": "uniform_random"}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one experiment run."""

    method: str
    grid: str | None = None
    graph: str | None = None
    pop_per_node: int = 1
    k: int = 2
    epsilon: str = "0"
    phi: str = "one"
    best: str = "balanced"
    max_trees: int = 10
    max_fails: int = 3
    global_cap: int = 10_000
    trees: str = "uniform"
    num_plans: int | None = None
    steps: int | None = None
    subsample: int = 1
    election: str | None = None
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def check(self):
        if self.method not in ALL_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if (self.grid is None) == (self.graph is None):
            raise ValueError("exactly one of --grid and --graph is required")
        if self.method in SAMPLER_METHODS or self.method == "cuttability":
            if self.num_plans is None:
                raise ValueError(f"--num-plans is required for {self.method}")
        if self.method in CHAIN_METHODS and self.steps is None:
            raise ValueError(f"--steps is required for {self.method}")

    def load_host(self) -> Graph:
        if self.graph is not None:
            return load_graph(self.graph)
        rows, _, cols = self.grid.partition("x")
        return build_grid(int(rows), int(cols), self.pop_per_node)

    def bonsai_params(self) -> BonsaiParams:
        return BonsaiParams(
            epsilon=_as_fraction(self.epsilon),
            phi=self.phi,
            best_rule=_BEST_RULES[self.best],
            max_trees=self.max_trees,
            max_fails=self.max_fails,
            tree_source=self.trees,
            global_attempt_cap=self.global_cap,
        )


def _sample_one(g: Graph, method: str, k: int, params: BonsaiParams, seed: int, index: int):
    rng = np.random.default_rng([seed, index])
    if method == "complete-cut":
        return complete_cut(g, k, rng)
    if method == "bonsai":
        plan, _ = bonsai_sample(g, k, rng, params)
        return plan
    if method == "alg2":
        return simultaneous_cut_sample(g, k, rng, params)
    raise ValueError(f"not an independent sampler: {method}")


def _sample_chunk(payload):
    g, method, k, params, seed, indices = payload
    return [(i, _sample_one(g, method, k, params, seed, i).assignment) for i in indices]


def _generate_independent(g: Graph, config: RunConfig) -> list[Plan]:
    params = config.bonsai_params()
    indices = list(range(config.num_plans))
    eps = _as_fraction(config.epsilon) if config.method == "bonsai" else 0
    if config.workers <= 1:
        pairs = _sample_chunk((g, config.method, config.k, params, config.seed, indices))
    else:
        chunks = [c.tolist() for c in np.array_split(indices, 4 * config.workers) if c.size]
        payloads = [(g, config.method, config.k, params, config.seed, c) for c in chunks]
        with Pool(config.workers) as pool:
            pairs = [pair for block in pool.map(_sample_chunk, payloads) for pair in block]
    pairs.sort(key=lambda x: x[0])
    return [Plan(g, assign, config.k, eps) for _, assign in pairs]


def _write_ensemble(g: Graph, plans: list[Plan], config: RunConfig, out: str):
    with open(os.path.join(out, "plans.jsonl"), "w") as fh:
        for i, plan in enumerate(plans):
            fh.write(json.dumps({"plan_id": i, "assignment": plan.to_id_map()}))
            fh.write("\n")
    write_cut_edges_csv(
        os.path.join(out, "cut_edges.csv"),
        [(i, cut_edges(g, p)) for i, p in enumerate(plans)],
    )
    if g.grid_shape is not None:
        rows, cols = g.grid_shape
        perim_rows = []
        for i, p in enumerate(plans):
            for d, v in enumerate(district_perimeters(rows, cols, p)):
                perim_rows.append((i, d, v))
        write_perimeters_csv(os.path.join(out, "perimeters.csv"), perim_rows)
    if config.election is not None:
        share_rows = []
        for i, p in enumerate(plans):
            for rank, s in enumerate(ordered_vote_shares(g, p, config.election), start=1):
                share_rows.append((i, rank, float(s)))
        write_shares_csv(os.path.join(out, "shares.csv"), share_rows)
    summary = summarize_ensemble(g, plans, election=config.election)
    write_summary_json(os.path.join(out, "summary.json"), summary)


def _write_manifest(config: RunConfig, out: str):
    manifest = {
        "config": asdict(config),
        "versions": {
            "treecut": treecut.__version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(config: RunConfig) -> int:
    """Execute one experiment and write its outputs; returns a process exit code."""
    config.check()
    g = config.load_host()
    out = config.out
    os.makedirs(out, exist_ok=True)
    if config.method in SAMPLER_METHODS:
        plans = _generate_independent(g, config)
        _write_ensemble(g, plans, config, out)
    elif config.method in CHAIN_METHODS:
        rng = np.random.default_rng([config.seed, 0])
        plans = recom_chain(
            g,
            config.k,
            RECOM_VARIANTS[config.method],
            _as_fraction(config.epsilon),
            config.steps,
            config.subsample,
            None,
            rng,
        )
        _write_ensemble(g, plans, config, out)
    elif config.method in ORACLE_METHODS:
        if config.method == "oracle-prop1":
            dist = complete_cut_distribution(g, config.k)
        else:
            dist = algorithm2_distribution(g, config.k)
        with open(os.path.join(out, "distribution.json"), "w") as fh:
            json.dump(dist.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif config.method == "cuttability":
        rng = np.random.default_rng([config.seed, 0])
        report = cuttability_experiment(g, config.k, config.num_plans, rng)
        payload = {
            "num_trees": config.num_plans,
            "pct_cuttable": report.pct_cuttable,
            "max_valid_edges": report.max_valid_edges,
            "trees_at_max": report.trees_at_max,
            "histogram": {str(c): n for c, n in sorted(report.histogram.items())},
        }
        with open(os.path.join(out, "cuttability.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _write_manifest(config, out)
    return 0


def validate_plans(g: Graph, plans_path, k: int | None = None, epsilon=0) -> dict:
    """Per-plan pass/fail on connectivity, population bounds, and district count."""
    results = []
    with open(plans_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            plan_id = rec.get("plan_id")
            mapping = rec["assignment"]
            expected_k = k if k is not None else max(int(d) for d in mapping.values()) + 1
            try:
                Plan.from_id_map(g, mapping, expected_k, epsilon)
                results.append({"plan_id": plan_id, "ok": True})
            except (PlanError, KeyError, ValueError) as exc:
                results.append({"plan_id": plan_id, "ok": False, "error": str(exc)})
    passed = sum(1 for r in results if r["ok"])
    return {"total": len(results), "passed": passed, "failed": len(results) - passed, "plans": results}


def _env(name: str, fallback=None):
    return os.environ.get(f"TREECUT_{name}", fallback)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecut",
        description="Independent sampling of connected, balanced graph partitions.",
        epilog="Every flag may be supplied via an environment variable with prefix "
        "TREECUT_, e.g. TREECUT_SEED=7 (flags given on the command line win).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a sampler, chain, oracle, or cuttability experiment")
    runp.add_argument("--method", default=_env("METHOD"), choices=ALL_METHODS, required=_env("METHOD") is None)
    runp.add_argument("--grid", default=_env("GRID"), help="grid host, e.g. 7x7")
    runp.add_argument("--graph", default=_env("GRAPH"), help="dual-graph JSON file")
    runp.add_argument("--pop-per-node", default=_env("POP_PER_NODE", "1"))
    runp.add_argument("-k", default=_env("K"), required=_env("K") is None, help="district count")
    runp.add_argument("--epsilon", default=_env("EPSILON", "0"), help="population tolerance, e.g. 0.05")
    runp.add_argument("--phi", default=_env("PHI", "one"), choices=("one", "identity"))
    runp.add_argument("--best", default=_env("BEST", "balanced"), choices=tuple(_BEST_RULES))
    runp.add_argument("--max-trees", default=_env("MAX_TREES", "10"))
    runp.add_argument("--max-fails", default=_env("MAX_FAILS", "3"))
    runp.add_argument("--global-cap", default=_env("GLOBAL_CAP", "10000"))
    runp.add_argument("--trees", default=_env("TREES", "uniform"), choices=("uniform", "minimum"))
    runp.add_argument("--num-plans", default=_env("NUM_PLANS"), help="plans (or trees for cuttability)")
    runp.add_argument("--steps", default=_env("STEPS"), help="chain steps (recom methods)")
    runp.add_argument("--subsample", default=_env("SUBSAMPLE", "1"))
    runp.add_argument("--election", default=_env("ELECTION"))
    runp.add_argument("--seed", default=_env("SEED", "0"))
    runp.add_argument("--workers", default=_env("WORKERS", "1"))
    runp.add_argument("--out", default=_env("OUT", "out"))

    valp = sub.add_parser("validate", help="validate a plans.jsonl file against a host graph")
    valp.add_argument("--grid", default=_env("GRID"))
    valp.add_argument("--graph", default=_env("GRAPH"))
    valp.add_argument("--pop-per-node", default=_env("POP_PER_NODE", "1"))
    valp.add_argument("-k", default=_env("K"))
    valp.add_argument("--epsilon", default=_env("EPSILON", "0"))
    valp.add_argument("--plans", required=True, help="plans.jsonl to check")
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        method=args.method,
        grid=args.grid,
        graph=args.graph,
        pop_per_node=int(args.pop_per_node),
        k=int(args.k),
        epsilon=str(args.epsilon),
        phi=args.phi,
        best=args.best,
        max_trees=int(args.max_trees),
        max_fails=int(args.max_fails),
        global_cap=int(args.global_cap),
        trees=args.trees,
        num_plans=None if args.num_plans is None else int(args.num_plans),
        steps=None if args.steps is None else int(args.steps),
        subsample=int(args.subsample),
        election=args.election,
        seed=int(args.seed),
        workers=int(args.workers),
        out=args.out,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return run(config_from_args(args))
        if args.command == "validate":
            if (args.grid is None) == (args.graph is None):
                raise ValueError("exactly one of --grid and --graph is required")
            if args.graph is not None:
                g = load_graph(args.graph)
            else:
                rows, _, cols = args.grid.partition("x")
                g = build_grid(int(rows), int(cols), int(args.pop_per_node))
            k = None if args.k is None else int(args.k)
            report = validate_plans(g, args.plans, k, _as_fraction(str(args.epsilon)))
            print(json.dumps({k_: v for k_, v in report.items() if k_ != "plans"}))
            for rec in report["plans"]:
                if not rec["ok"]:
                    print(f"plan {rec['plan_id']}: FAIL {rec['error']}")
            return 0 if report["failed"] == 0 else 1
    except Exception as exc:  # surface module errors with a named diagnostic
        print(f"treecut: error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
