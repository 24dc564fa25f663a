"""flatsat-plot: render figures from flatsat trace CSVs and design reports.

Usage: flatsat-plot --spec figure.json

The spec file holds {"kind", "inputs", "output", "labels"?, "design"?,
"metrics"?}; see figures.FigureSpec.  Exit code 0 on success, 1 on any
error (bad spec, missing channel, empty trace); no output file is written
on failure.
"""

from __future__ import annotations

import argparse
import sys

from .csvio import TraceFormatError
from .figures import FigureSpec, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="flatsat-plot", description=__doc__)
    ap.add_argument("--spec", required=True, help="figure spec JSON path")
    args = ap.parse_args(argv)
    try:
        spec = FigureSpec.from_json(args.spec)
        out = render(spec)
    except (OSError, ValueError, KeyError, TraceFormatError) as exc:
        print(f"flatsat-plot: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
