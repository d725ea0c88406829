"""Batch figure generation driven by a JSON spec file."""

import argparse
import sys

from plotkit.figures import FigureError, load_spec_file, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render treecut metric CSVs into figures."
    )
    parser.add_argument("spec", help="JSON figure-spec file (single figure or {'figures': [...]})")
    args = parser.parse_args(argv)
    try:
        specs = load_spec_file(args.spec)
        for spec in specs:
            result = render(spec)
            print(f"wrote {result.path} ({len(result.series_labels)} series)")
    except (FigureError, OSError, KeyError, ValueError) as exc:
        print(f"plotkit: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
