"""plotkit: publication-style figures from treecut metric CSV files.

Consumes the primary toolkit's outputs (cut_edges.csv, perimeters.csv,
shares.csv) and renders overlaid histograms and per-rank box plots. Never
recomputes metrics.
"""

from plotkit.figures import FigureSpec, RenderResult, SeriesInput, load_spec_file, render

__version__ = "0.1.0"
