"""Figure rendering: overlaid frequency histograms and vote-share box plots by rank."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("histogram-overlay", "boxplot-by-rank")

# fixed palette so re-rendering is stable
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#7f7f7f")


class FigureError(ValueError):
    """Bad figure specification or inconsistent input series."""


@dataclass(frozen=True)
class SeriesInput:
    path: str
    label: str


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input series, kind, optional rank window, output image.

    width/height are the output raster size in pixels.
    """

    kind: str
    inputs: tuple[SeriesInput, ...]
    output: str
    rank_window: tuple[int, int] | None = None
    title: str | None = None
    x_label: str | None = None
    width: int = 800
    height: int = 600
    dpi: int = 100

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise FigureError("figure needs at least one input series")
        if self.rank_window is not None:
            lo, hi = self.rank_window
            if lo < 1 or hi < lo:
                raise FigureError(f"bad rank window {self.rank_window}")

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FigureSpec":
        inputs = tuple(SeriesInput(s["path"], s["label"]) for s in obj.get("inputs", ()))
        window = obj.get("rank_window")
        return cls(
            kind=obj.get("kind", ""),
            inputs=inputs,
            output=obj["output"],
            rank_window=tuple(window) if window else None,
            title=obj.get("title"),
            x_label=obj.get("x_label"),
            width=int(obj.get("width", 800)),
            height=int(obj.get("height", 600)),
            dpi=int(obj.get("dpi", 100)),
        )


@dataclass
class RenderResult:
    """What was drawn: the output path plus series/rank counts for verification."""

    path: str
    series_labels: list[str]
    ranks_drawn: list[int] = field(default_factory=list)


def _read_values(path) -> list[int]:
    """Value column of a (plan_id, value) or (plan_id, district, value) CSV."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "value" not in reader.fieldnames:
            raise FigureError(f"{path}: expected a 'value' column")
        for row in reader:
            out.append(int(row["value"]))
    if not out:
        raise FigureError(f"{path}: empty series")
    return out


def _read_shares(path) -> dict[int, list[float]]:
    """rank -> shares from a (plan_id, rank, share) CSV."""
    out: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"rank", "share"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise FigureError(f"{path}: expected 'rank' and 'share' columns")
        for row in reader:
            out.setdefault(int(row["rank"]), []).append(float(row["share"]))
    if not out:
        raise FigureError(f"{path}: empty series")
    return out


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure to PNG; deterministic for fixed inputs."""
    fig, ax = plt.subplots(figsize=(spec.width / spec.dpi, spec.height / spec.dpi), dpi=spec.dpi)
    try:
        if spec.kind == "histogram-overlay":
            result = _render_histogram(spec, ax)
        else:
            result = _render_boxplots(spec, ax)
        if spec.title:
            ax.set_title(spec.title)
        Path(spec.output).parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, dpi=spec.dpi)
    finally:
        plt.close(fig)
    result.path = spec.output
    return result


def _render_histogram(spec: FigureSpec, ax) -> RenderResult:
    series = [(inp.label, _read_values(inp.path)) for inp in spec.inputs]
    lo = min(min(v) for _, v in series)
    hi = max(max(v) for _, v in series)
    bins = np.arange(lo - 0.5, hi + 1.5)
    for i, (label, values) in enumerate(series):
        weights = np.full(len(values), 1.0 / len(values))
        ax.hist(
            values,
            bins=bins,
            weights=weights,
            histtype="stepfilled",
            alpha=0.45,
            color=_COLORS[i % len(_COLORS)],
            edgecolor=_COLORS[i % len(_COLORS)],
            label=label,
        )
    ax.set_xlabel(spec.x_label or "value")
    ax.set_ylabel("frequency")
    ax.legend()
    return RenderResult("", [label for label, _ in series])


def _render_boxplots(spec: FigureSpec, ax) -> RenderResult:
    series = [(inp.label, _read_shares(inp.path)) for inp in spec.inputs]
    rank_sets = [set(shares) for _, shares in series]
    if any(rs != rank_sets[0] for rs in rank_sets[1:]):
        raise FigureError("mismatched district counts across series")
    ranks = sorted(rank_sets[0])
    if spec.rank_window is not None:
        lo, hi = spec.rank_window
        ranks = [r for r in ranks if lo <= r <= hi]
        if not ranks:
            raise FigureError(f"rank window {spec.rank_window} selects no ranks")
    n = len(series)
    group = n + 1
    for i, (label, shares) in enumerate(series):
        data = [shares[r] for r in ranks]
        positions = [j * group + i for j in range(len(ranks))]
        color = _COLORS[i % len(_COLORS)]
        ax.boxplot(
            data,
            positions=positions,
            widths=0.8,
            patch_artist=True,
            boxprops={"facecolor": color, "alpha": 0.55},
            medianprops={"color": "black"},
            flierprops={"marker": ".", "markersize": 3},
        )
        ax.plot([], [], color=color, label=label)
    centers = [j * group + (n - 1) / 2 for j in range(len(ranks))]
    ax.set_xticks(centers)
    ax.set_xticklabels([str(r) for r in ranks], rotation=90 if len(ranks) > 25 else 0, fontsize=7)
    ax.set_xlabel(spec.x_label or "district rank")
    ax.set_ylabel("Democratic share")
    ax.legend()
    return RenderResult("", [label for label, _ in series], ranks)


def load_spec_file(path) -> list[FigureSpec]:
    """A JSON batch file: {"figures": [{...}, ...]} or a single figure object."""
    with open(path) as fh:
        obj = json.load(fh)
    figures = obj["figures"] if isinstance(obj, dict) and "figures" in obj else [obj]
    return [FigureSpec.from_json_obj(f) for f in figures]
