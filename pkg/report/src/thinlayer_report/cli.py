"""Command line entry point: ``report <study-dir> [-o out.html]``."""

from __future__ import annotations

import argparse
import os
import sys

from .render import build_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="report", description="Render a study directory to a single HTML report."
    )
    parser.add_argument("study_dir", help="directory containing the study outputs")
    parser.add_argument("-o", "--output", default=None,
                        help="output HTML path (default: <study-dir>/../<name>_report.html)")
    args = parser.parse_args(argv)
    out = args.output
    if out is None:
        base = os.path.basename(os.path.normpath(args.study_dir)) or "study"
        out = os.path.join(os.path.dirname(os.path.normpath(args.study_dir)),
                           f"{base}_report.html")
    try:
        path = build_report(args.study_dir, out)
    except ValueError as exc:
        print(f"report: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
