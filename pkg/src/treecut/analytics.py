"""Ensemble metrics: plan-wide cut edges, grid district perimeters, ordered vote shares."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from treecut.graph_core import Graph, Plan


def cut_edges(g: Graph, plan: Plan) -> int:
    """Number of graph edges whose endpoints lie in different districts."""
    a = plan.assignment
    return int(np.count_nonzero(a[g.edges[:, 0]] != a[g.edges[:, 1]]))


def district_perimeters(rows: int, cols: int, plan: Plan) -> list[int]:
    """Per-district perimeter in unit cell-boundary segments, outer boundary included.

    For a district of c cells with i internal adjacencies the perimeter is
    4c - 2i.
    """
    g = plan.graph
    if g.grid_shape != (rows, cols):
        raise ValueError(f"plan is not on a {rows}x{cols} grid host")
    a = plan.assignment
    cells = np.bincount(a, minlength=plan.k)
    eu = a[g.edges[:, 0]]
    ev = a[g.edges[:, 1]]
    same = eu == ev
    internal = np.bincount(eu[same], minlength=plan.k)
    return (4 * cells - 2 * internal).tolist()


def ordered_vote_shares(g: Graph, plan: Plan, election: str) -> list[Fraction]:
    """Democratic two-party share per district, sorted ascending (rank 1 least Democratic)."""
    if not g.votes or election not in g.votes:
        raise ValueError(f"election {election!r} not present on the graph")
    tallies = g.votes[election]
    dem = np.zeros(plan.k, np.int64)
    rep = np.zeros(plan.k, np.int64)
    np.add.at(dem, plan.assignment, tallies[:, 0])
    np.add.at(rep, plan.assignment, tallies[:, 1])
    shares = []
    for d in range(plan.k):
        total = int(dem[d]) + int(rep[d])
        if total == 0:
            raise ValueError(f"district {d} has zero total votes in {election!r}")
        shares.append(Fraction(int(dem[d]), total))
    shares.sort()
    return shares


@dataclass
class EnsembleSummary:
    """Aggregated metrics for an ensemble of same-k plans."""

    sample_count: int
    cut_edge_histogram: dict[int, int]
    perimeter_histogram: dict[int, int] | None
    ordered_share_quartiles: list[tuple[float, float, float, float, float]] | None

    def to_json_obj(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "cut_edge_histogram": {str(k): v for k, v in sorted(self.cut_edge_histogram.items())},
            "perimeter_histogram": (
                {str(k): v for k, v in sorted(self.perimeter_histogram.items())}
                if self.perimeter_histogram is not None
                else None
            ),
            "ordered_share_quartiles": self.ordered_share_quartiles,
        }


def summarize_ensemble(
    g: Graph,
    plans: list[Plan],
    *,
    election: str | None = None,
    include_perimeters: bool | None = None,
) -> EnsembleSummary:
    """Histograms and per-rank share quartiles over an ensemble of plans."""
    if not plans:
        raise ValueError("empty ensemble")
    k = plans[0].k
    if any(p.k != k for p in plans):
        raise ValueError("ensemble mixes district counts")
    if include_perimeters is None:
        include_perimeters = g.grid_shape is not None
    cut_hist: dict[int, int] = {}
    for p in plans:
        c = cut_edges(g, p)
        cut_hist[c] = cut_hist.get(c, 0) + 1
    perim_hist = None
    if include_perimeters:
        rows, cols = g.grid_shape
        perim_hist = {}
        for p in plans:
            for v in district_perimeters(rows, cols, p):
                perim_hist[v] = perim_hist.get(v, 0) + 1
    quartiles = None
    if election is not None:
        mat = np.array(
            [[float(s) for s in ordered_vote_shares(g, p, election)] for p in plans]
        )
        quartiles = [
            tuple(float(x) for x in np.quantile(mat[:, r], [0.0, 0.25, 0.5, 0.75, 1.0]))
            for r in range(k)
        ]
    return EnsembleSummary(len(plans), cut_hist, perim_hist, quartiles)


# -- file outputs -------------------------------------------------------------


def write_cut_edges_csv(path, values: list[tuple[int, int]]):
    """Rows of (plan_id, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["plan_id", "value"])
        w.writerows(values)


def write_perimeters_csv(path, values: list[tuple[int, int, int]]):
    """Rows of (plan_id, district, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["plan_id", "district", "value"])
        w.writerows(values)


def write_shares_csv(path, values: list[tuple[int, int, float]]):
    """Rows of (plan_id, rank, share); rank 1 is the least Democratic district."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["plan_id", "rank", "share"])
        for plan_id, rank, share in values:
            w.writerow([plan_id, rank, repr(float(share))])


def write_summary_json(path, summary: EnsembleSummary):
    with open(path, "w") as fh:
        json.dump(summary.to_json_obj(), fh, indent=2, sort_keys=True)
        fh.write("\n")
