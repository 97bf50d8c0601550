"""Rendering of result tables as text, JSON and CSV.

Text mode prints numbers with six significant digits; JSON and CSV carry
full double precision.  Undefined coefficients print as ``undefined`` (JSON
``null``).
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

from .anova import AnovaTable
from .confidence import ConfidenceInterval
from .dstudy import DStudyResult
from .reliability import GCoeffResult

__all__ = [
    "FORMATS",
    "anova_records",
    "g_records",
    "dstudy_records",
    "ci_records",
    "render_anova",
    "render_g_table",
    "render_dstudy",
    "render_ci",
    "build_report",
    "csv_tables",
]

FORMATS = ("text", "json", "csv")
UNDEFINED = "undefined"


def fmt_number(x) -> str:
    if x is None:
        return UNDEFINED
    if isinstance(x, int):
        return str(x)
    text = f"{x:.6g}"
    return "0" if text == "-0" else text


def fmt_coefficient(x) -> str:
    if x is None:
        return UNDEFINED
    return f"{x:#.6g}"


def _text_table(title: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    rows = [list(map(str, r)) for r in rows]
    widths = [len(h) for h in header]
    for r in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, r)]

    def line(cells):
        out = [cells[0].ljust(widths[0])]
        out += [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join(out).rstrip()

    rule = "-" * len(line(list(header)))
    body = [title, rule, line(list(header)), rule]
    body += [line(r) for r in rows]
    body.append(rule)
    return "\n".join(body) + "\n"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


# -- records (the JSON shapes) ----------------------------------------------


def anova_records(table: AnovaTable) -> dict:
    return {
        "grand_mean": table.grand_mean,
        "t_u": table.t_u,
        "levels": dict(table.levels.counts),
        "rows": [
            {
                "component": r.name,
                "df": r.df,
                "t": r.t_value,
                "ss": r.ss,
                "ms": r.ms,
                "sigma2": r.sigma2,
            }
            for r in table.rows
        ],
    }


def _g_record(r: GCoeffResult) -> dict:
    return {
        "object": r.object,
        "tau": r.tau,
        "delta": r.delta,
        "Delta": r.Delta,
        "e_rho2": r.e_rho2,
        "phi": r.phi,
        "clamped_components": list(r.clamped_components),
        "roles": dict(r.roles),
        "levels": dict(r.levels),
    }


def g_records(results: Sequence[GCoeffResult]) -> list[dict]:
    return [_g_record(r) for r in results]


def dstudy_records(result: DStudyResult) -> dict:
    scenarios = []
    for s in result.scenarios:
        rec = _g_record(s.result)
        del rec["object"], rec["roles"]
        rec["levels"] = dict(s.levels)
        scenarios.append(rec)
    return {"object": result.object, "notes": list(result.notes), "scenarios": scenarios}


def ci_records(groups: Sequence[Sequence[ConfidenceInterval]]) -> list[dict]:
    out = []
    for cis in groups:
        if not cis:
            continue
        first = cis[0]
        out.append(
            {
                "object": first.facet,
                "alpha": first.alpha,
                "half_width": first.half_width,
                "intervals": [
                    {"level": ci.object_level, "mean": ci.mean, "lower": ci.lower, "upper": ci.upper}
                    for ci in cis
                ],
            }
        )
    return out


# -- per-table renderers ----------------------------------------------------

_ANOVA_HEADER = ("Source", "df", "T", "SS", "MS", "Variance")


def render_anova(table: AnovaTable, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(anova_records(table), indent=2)
    if fmt == "csv":
        return _csv_text(
            ("component", "df", "t", "ss", "ms", "sigma2"),
            ((r.name, r.df, r.t_value, r.ss, r.ms, r.sigma2) for r in table.rows),
        )
    rows = []
    for r in table.rows:
        variance = fmt_number(r.sigma2) + (" *" if r.negative else "")
        rows.append((r.name, fmt_number(r.df), fmt_number(r.t_value), fmt_number(r.ss),
                     fmt_number(r.ms), variance))
    text = _text_table("G-study ANOVA", _ANOVA_HEADER, rows)
    text += f"Grand mean: {fmt_number(table.grand_mean)}   T(U): {fmt_number(table.t_u)}\n"
    if any(r.negative for r in table.rows):
        text += "* negative estimate; treated as 0 in coefficients and intervals\n"
    return text


_G_HEADER = ("Object", "tau", "delta", "Delta", "E(rho^2)", "Phi", "Clamped")


def render_g_table(results: Sequence[GCoeffResult], fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(g_records(results), indent=2)
    if fmt == "csv":
        return _csv_text(
            ("object", "tau", "delta", "Delta", "e_rho2", "phi", "clamped_components"),
            ((r.object, r.tau, r.delta, r.Delta, r.e_rho2, r.phi, ";".join(r.clamped_components))
             for r in results),
        )
    rows = [
        (r.object, fmt_number(r.tau), fmt_number(r.delta), fmt_number(r.Delta),
         fmt_coefficient(r.e_rho2), fmt_coefficient(r.phi), ", ".join(r.clamped_components) or "-")
        for r in results
    ]
    return _text_table("Generalizability (E(rho^2)) and dependability (Phi) coefficients", _G_HEADER, rows)


def render_dstudy(result: DStudyResult, fmt: str = "text") -> str:
    facets = list(result.scenarios[0].levels) if result.scenarios else []
    if fmt == "json":
        return json.dumps(dstudy_records(result), indent=2)
    if fmt == "csv":
        return _csv_text(
            [f"n_{f}" for f in facets] + ["tau", "delta", "Delta", "e_rho2", "phi"],
            ([s.levels[f] for f in facets]
             + [s.result.tau, s.result.delta, s.result.Delta, s.result.e_rho2, s.result.phi]
             for s in result.scenarios),
        )
    header = [f"n({f})" for f in facets] + ["tau", "delta", "Delta", "E(rho^2)", "Phi"]
    rows = [
        [str(s.levels[f]) for f in facets]
        + [fmt_number(s.result.tau), fmt_number(s.result.delta), fmt_number(s.result.Delta),
           fmt_coefficient(s.result.e_rho2), fmt_coefficient(s.result.phi)]
        for s in result.scenarios
    ]
    text = _text_table(f"D-study (object of measurement: {result.object})", header, rows)
    for note in result.notes:
        text += f"note: {note}\n"
    return text


def render_ci(cis: Sequence[ConfidenceInterval], fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(ci_records([cis]), indent=2)
    if fmt == "csv":
        return _csv_text(
            ("object", "level", "mean", "lower", "upper", "half_width", "alpha"),
            ((ci.facet, ci.object_level, ci.mean, ci.lower, ci.upper, ci.half_width, ci.alpha)
             for ci in cis),
        )
    if not cis:
        return ""
    first = cis[0]
    level = 100 * (1 - first.alpha)
    rows = [(str(ci.object_level), fmt_number(ci.mean), fmt_number(ci.lower), fmt_number(ci.upper))
            for ci in cis]
    text = _text_table(
        f"{fmt_number(level)}% confidence intervals for {first.facet} mean scores",
        (first.facet, "Mean", "Lower", "Upper"),
        rows,
    )
    text += f"Half-width: {fmt_number(first.half_width)}\n"
    return text


# -- whole report -----------------------------------------------------------


def build_report(
    anova: AnovaTable,
    g_results: Sequence[GCoeffResult],
    ci_groups: Sequence[Sequence[ConfidenceInterval]],
    dstudy: DStudyResult | None = None,
    warnings: Sequence[str] = (),
    config: dict | None = None,
    fmt: str = "text",
) -> str:
    """The full report as one string (text, JSON, or concatenated CSV tables)."""
    if fmt == "json":
        doc = {
            "anova": anova_records(anova),
            "g_coefficients": g_records(g_results),
        }
        if dstudy is not None:
            doc["d_study"] = dstudy_records(dstudy)
        doc["confidence_intervals"] = ci_records(ci_groups)
        doc["warnings"] = list(warnings)
        doc["config_echo"] = dict(config or {})
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        return "\r\n".join(f"# {name}\r\n{body}" for name, body in csv_tables(anova, g_results, ci_groups, dstudy).items())
    parts = [render_anova(anova), render_g_table(g_results)]
    if dstudy is not None:
        parts.append(render_dstudy(dstudy))
    parts += [render_ci(cis) for cis in ci_groups if cis]
    if warnings:
        parts.append("Warnings\n" + "".join(f"- {w}\n" for w in warnings))
    return "\n".join(parts)


def csv_tables(anova, g_results, ci_groups, dstudy=None) -> dict[str, str]:
    tables = {
        "anova": render_anova(anova, "csv"),
        "g_coefficients": render_g_table(g_results, "csv"),
    }
    if dstudy is not None:
        tables["d_study"] = render_dstudy(dstudy, "csv")
    flat = [ci for cis in ci_groups for ci in cis]
    tables["confidence_intervals"] = render_ci(flat, "csv")
    return tables
