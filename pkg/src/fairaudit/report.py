"""Report assembly and emission as JSON (canonical), flat CSV or markdown."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from fairaudit import tables
from fairaudit.errors import MetricUndefined
from fairaudit.harness import RunResults
from fairaudit.metrics import RATES

REPORT_FORMAT = "fairaudit-report/1"
COMPARISON_FORMAT = "fairaudit-comparison/1"
FORMATS = ("json", "csv", "markdown")
SUFFIX = {"json": "json", "csv": "csv", "markdown": "md"}


def build_report(results: list[RunResults]) -> dict:
    verdicts = tables.impact_verdicts(results)
    flags = [f for res in results for f in res.flags()]
    try:
        corr = tables.correlation_matrix(results) if len(results) > 1 else None
    except MetricUndefined as exc:
        corr = None
        flags.append(f"correlation_unavailable:{exc}")
    return {
        "format": REPORT_FORMAT,
        "tasks": [
            {
                "name": r.name,
                "dataset": r.task.get("dataset"),
                "attributes": r.task.get("attributes", []),
                "surface": r.task.get("surface"),
                "runs": len(r.runs),
                "methods": r.methods,
            }
            for r in results
        ],
        "frequency": tables.frequency_table(results, verdicts)["rows"],
        "effect": tables.effect_table(results, verdicts)["rows"],
        "correlation": corr,
        "flags": flags,
    }


def build_comparison(a, b) -> dict:
    return {"format": COMPARISON_FORMAT, **tables.compare_methods(a, b)}


def to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def fmt(x) -> str:
    if x is None:
        return "n/a"
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _columns_by_rate(names):
    by_rate = {rate.upper(): [] for rate in RATES}
    for name in names:
        by_rate[name.split("_")[0]].append(name)
    return {k: v for k, v in by_rate.items() if v}


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] * len(header)) + "|"]
    lines += ["| " + " | ".join(map(str, row)) + " |" for row in rows]
    return "\n".join(lines)


def _ordered_columns(rows: dict) -> list[str]:
    cols = []
    for row in rows.values():
        for name in row:
            if name not in cols:
                cols.append(name)
    return cols


def report_markdown(doc: dict) -> str:
    out = ["# Group impact report", ""]
    out.append("Tasks: " + ", ".join(f"{t['name']} ({t['runs']} runs, {t['surface']})" for t in doc["tasks"]))
    out.append("")

    freq = doc["frequency"]
    out += ["## Significant impact per group (↑ increase, - no significant change, ↓ decrease)", ""]
    for rate, cols in _columns_by_rate(_ordered_columns(freq)).items():
        header = ["Method"] + [f"{c} ({s})" for c in cols for s in ("↑", "-", "↓")]
        rows = []
        for method, row in freq.items():
            cells = [method]
            for c in cols:
                cell = row.get(c)
                cells += [cell["increase"], cell["tie"], cell["decrease"]] if cell else ["", "", ""]
            rows.append(cells)
        out += [_md_table(header, rows), ""]

    eff = doc["effect"]
    out += ["## Effect size per group: mean change (after-before)", ""]
    for rate, cols in _columns_by_rate(_ordered_columns(eff)).items():
        header = ["Method"]
        for c in cols:
            arrow = "↓" if tables.is_privileged_role(c.split("_", 1)[1]) else "↑"
            header += [f"{c} Mean", f"{c} Max {arrow}", f"{c} Large {arrow}"]
        rows = []
        for method, row in eff.items():
            cells = [method]
            for c in cols:
                e = row.get(c)
                if not e:
                    cells += ["", "", ""]
                    continue
                cells += [
                    f"{fmt(e['mean'])} ({fmt(e['mean_after'])}-{fmt(e['mean_before'])})",
                    f"{fmt(e['max'])} ({fmt(e['max_after'])}-{fmt(e['max_before'])})",
                    f"{e['large_pct']:.1f}%",
                ]
            rows.append(cells)
        out += [_md_table(header, rows), ""]

    corr = doc.get("correlation")
    if corr:
        out += ["## Spearman correlation of changes (⊗ = not significant, p >= 0.05)", ""]
        names = corr["metrics"]
        rows = []
        for i, name in enumerate(names):
            cells = [f"Δ{name}"]
            for j in range(len(names)):
                r = corr["rho"][i][j]
                if r is None:
                    cells.append("n/a")
                else:
                    cells.append(f"{r:.2f}" + ("" if corr["significant"][i][j] else " ⊗"))
            rows.append(cells)
        out += [_md_table([""] + [f"Δ{n}" for n in names], rows), ""]
        out.append(f"Observations: {len(corr['observations'])} (method, task) pairs")
        out.append("")

    if doc["flags"]:
        out += ["## Flags", ""] + [f"- {f}" for f in doc["flags"]] + [""]
    return "\n".join(out)


def comparison_markdown(doc: dict) -> str:
    cand = ", ".join(doc["candidate"])
    ref = ", ".join(doc["reference"])
    out = [f"# Win-tie-loss: {cand} vs {ref}", ""]
    rows = [[m, c["win"], c["tie"], c["loss"]] for m, c in doc["counts"].items()]
    out += [_md_table(["Metric", "Win", "Tie", "Loss"], rows), ""]
    sr = doc["overall_sr"]
    out.append(f"Mean overall selection rate: candidate {fmt(sr['mean_overall_sr_candidate'])}, "
               f"reference {fmt(sr['mean_overall_sr_reference'])}, "
               f"difference {fmt(sr['mean_overall_sr_difference'])}")
    if "mean_increase_vs_base_candidate" in sr:
        out.append(f"Increase over baseline: candidate {fmt(sr['mean_increase_vs_base_candidate'])}, "
                   f"reference {fmt(sr['mean_increase_vs_base_reference'])}")
    out.append("")
    return "\n".join(out)


def _csv_rows(doc: dict):
    if doc["format"] == COMPARISON_FORMAT:
        for metric, cell in doc["counts"].items():
            for k, v in cell.items():
                yield ("wtl", "", metric, k, v)
        for k, v in doc["overall_sr"].items():
            yield ("overall_sr", "", "", k, v)
        return
    for method, row in doc["frequency"].items():
        for metric, cell in row.items():
            for k, v in cell.items():
                yield ("frequency", method, metric, k, v)
    for method, row in doc["effect"].items():
        for metric, cell in row.items():
            for k, v in cell.items():
                yield ("effect", method, metric, k, v)
    corr = doc.get("correlation")
    if corr:
        for i, a in enumerate(corr["metrics"]):
            for j, b in enumerate(corr["metrics"]):
                yield ("correlation", "", a, f"rho:{b}", corr["rho"][i][j])
                yield ("correlation", "", a, f"p:{b}", corr["p"][i][j])


def to_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["table", "method", "metric", "field", "value"])
    for row in _csv_rows(doc):
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def render(doc: dict, fmt_: str) -> str:
    if fmt_ == "json":
        return to_json(doc)
    if fmt_ == "csv":
        return to_csv(doc)
    if fmt_ == "markdown":
        return comparison_markdown(doc) if doc["format"] == COMPARISON_FORMAT else report_markdown(doc)
    raise ValueError(f"unknown format {fmt_!r}; choose from {FORMATS}")


def emit_report(doc: dict, fmt_: str, out_dir, stem: str = "report") -> Path:
    """Write ``<out_dir>/<stem>.<ext>``; identical input gives identical bytes."""
    text = render(doc, fmt_)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{SUFFIX[fmt_]}"
    path.write_text(text, encoding="utf-8")
    return path


def schema_path(name: str = "report") -> Path:
    from importlib import resources

    return Path(str(resources.files("fairaudit") / "schemas" / f"{name}.schema.json"))
