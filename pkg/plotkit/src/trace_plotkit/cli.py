"""The ``plot`` command: render a figure from trace-sim outputs.

Either ``plot --spec spec.yaml`` (a YAML mapping mirroring PlotSpec) or
direct flags: ``plot --kind decay --csv out/decay.csv --fit fit.json
--out-file decay.svg``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .render import FIGURE_KINDS, PlotSpec, SchemaError, render

SPEC_KEYS = {"kind", "csv", "out", "fit", "title", "xlim", "ylim", "format"}


def spec_from_yaml(path: str) -> PlotSpec:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise SchemaError("plot spec must be a YAML mapping")
    unknown = set(data) - SPEC_KEYS
    if unknown:
        raise SchemaError(f"unknown plot spec keys: {sorted(unknown)}")
    for key in ("kind", "csv", "out"):
        if key not in data:
            raise SchemaError(f"plot spec needs '{key}'")
    return PlotSpec(
        kind=str(data["kind"]), csv=str(data["csv"]), out=str(data["out"]),
        fit=data.get("fit"), title=data.get("title"),
        xlim=tuple(data["xlim"]) if data.get("xlim") else None,
        ylim=tuple(data["ylim"]) if data.get("ylim") else None,
        fmt=str(data.get("format", "svg")))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plot", description="render figures from trace-sim outputs")
    p.add_argument("--spec", help="YAML plot spec (overrides other flags)")
    p.add_argument("--kind", choices=FIGURE_KINDS)
    p.add_argument("--csv", help="input CSV from trace-sim")
    p.add_argument("--fit", help="fit-report JSON to overlay")
    p.add_argument("--out-file", help="output image path")
    p.add_argument("--title")
    p.add_argument("--xlim", nargs=2, type=float)
    p.add_argument("--ylim", nargs=2, type=float)
    p.add_argument("--format", choices=("svg", "png"), default="svg")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.spec:
            spec = spec_from_yaml(args.spec)
        else:
            if not (args.kind and args.csv and args.out_file):
                print("plot: need --spec or --kind/--csv/--out-file",
                      file=sys.stderr)
                return 2
            spec = PlotSpec(kind=args.kind, csv=args.csv, out=args.out_file,
                            fit=args.fit, title=args.title,
                            xlim=tuple(args.xlim) if args.xlim else None,
                            ylim=tuple(args.ylim) if args.ylim else None,
                            fmt=args.format)
        out = render(spec)
    except SchemaError as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
