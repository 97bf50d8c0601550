"""Command-line entry point.

    gstudy --data scores.csv --design "person x item" --response Response
    gstudy simulate --design "p x i" --levels '{"p": 20, "i": 10}' \\
        --truth '{"p": 4, "i": 1, "p x i": 2}' --seed 7 --out sim.csv

Exit codes: 0 success, 2 usage or design error, 3 data validation error,
4 computation error.  Errors go to stderr as one line starting with
``ERROR:<category>:``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .anova import run_anova
from .confidence import confidence_intervals
from .dataset import load_table, validate_and_index
from .design import parse_design
from .dstudy import run_d_study
from .errors import GStudyError
from .reliability import Role, default_analyses, g_coeffs_table
from .report import FORMATS, build_report, csv_tables

EXIT_CODES = {"usage": 2, "design": 2, "data": 3, "computation": 4}


class UsageError(GStudyError):
    category = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _json_arg(text: str, flag: str):
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{flag} is not valid JSON: {exc.msg}") from None
    if not isinstance(value, dict):
        raise UsageError(f"{flag} must be a JSON object")
    return value


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="gstudy",
        description="Generalizability-theory analysis of balanced long-format data.",
    )
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--design", required=True, help='design string, e.g. "person x (rater:item)"')
    p.add_argument("--response", required=True, help="name of the response column")
    p.add_argument("--dstudy", help='D-study grid as JSON, e.g. \'{"item": [4, 8]}\'')
    p.add_argument("--roles", help='facet roles as JSON, e.g. \'{"occasion": "fixed"}\'')
    p.add_argument("--object", help="object of measurement (default: every facet in turn)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level for intervals")
    p.add_argument("--format", dest="fmt", choices=FORMATS, default="text")
    p.add_argument("--out", help="output file, or a directory for one CSV per table")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(argv) -> int:
    args = _build_parser().parse_args(argv)
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    grid = _json_arg(args.dstudy, "--dstudy") if args.dstudy else None
    roles = _json_arg(args.roles, "--roles") if args.roles else {}

    design = parse_design(args.design)
    analyses = default_analyses(design, roles, args.object)
    try:
        raw = load_table(args.data, args.response)
    except OSError as exc:
        raise _DataFileError(f"cannot read {args.data}: {exc.strerror or exc}") from None
    data = validate_and_index(raw, design, args.response)
    anova = run_anova(data)

    g_results = g_coeffs_table(anova, analyses)
    objects = [next(n for n, r in a.items() if r is Role.OBJECT) for a in analyses]

    dstudy = None
    if grid is not None:
        d_roles = dict(roles)
        d_object = args.object
        if d_object is None and not any(str(v).lower() == "object" for v in roles.values()):
            d_object = objects[0]
        dstudy = run_d_study(anova, grid, d_roles, d_object)

    ci_groups = [confidence_intervals(data, anova, o, args.alpha) for o in objects]

    warnings = []
    for r in anova.rows:
        if r.negative:
            warnings.append(
                f"negative variance estimate for {r.name} ({r.sigma2:.6g}); treated as 0 downstream"
            )
    for res in g_results:
        if res.e_rho2 is None or res.phi is None:
            warnings.append(f"coefficients undefined for object {res.object} (tau + error = 0)")
    if dstudy is not None:
        warnings += [f"d-study: {n}" for n in dstudy.notes]

    config = {
        "data": args.data,
        "design": args.design,
        "design_canonical": design.render(),
        "response": args.response,
        "roles": roles,
        "object": args.object,
        "dstudy": grid,
        "alpha": args.alpha,
        "format": args.fmt,
    }

    if args.fmt == "csv" and args.out and (os.path.isdir(args.out) or args.out.endswith(os.sep)):
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, body in csv_tables(anova, g_results, ci_groups, dstudy).items():
            (outdir / f"{name}.csv").write_text(body, encoding="utf-8", newline="")
        return 0

    _write(build_report(anova, g_results, ci_groups, dstudy, warnings, config, args.fmt), args.out)
    return 0


class _DataFileError(GStudyError):
    category = "data"


def _simulate(argv) -> int:
    from .oracle import simulate, true_components

    p = _Parser(prog="gstudy simulate", description="Write simulated random-effects data as CSV.")
    p.add_argument("--design", required=True)
    p.add_argument("--levels", required=True, help='level counts as JSON, e.g. \'{"p": 20, "i": 10}\'')
    p.add_argument("--truth", required=True, help='component variances as JSON, e.g. \'{"p": 4, "p x i": 2}\'')
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--response", default="response")
    p.add_argument("--out")
    args = p.parse_args(argv)

    design = parse_design(args.design)
    levels = {design.resolve(k): int(v) for k, v in _json_arg(args.levels, "--levels").items()}
    missing = [n for n in design.names if n not in levels]
    if missing:
        raise UsageError(f"--levels lacks {', '.join(missing)}")
    truth = true_components(design, _json_arg(args.truth, "--truth"), args.mean)
    data = simulate(design, levels, truth, args.seed)
    rows = data.to_rows()
    buf_fields = list(design.names) + [args.response]
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(buf_fields)
        for row in rows:
            writer.writerow([row[n] for n in design.names] + [repr(row["response"])])
    finally:
        if args.out:
            fh.close()
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "simulate":
            return _simulate(argv[1:])
        return run(argv)
    except GStudyError as exc:
        category = getattr(exc, "category", "computation")
        message = " ".join(str(exc).split())
        print(f"ERROR:{category}:{type(exc).__name__}: {message}", file=sys.stderr)
        return EXIT_CODES.get(category, 4)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    raise SystemExit(main())
