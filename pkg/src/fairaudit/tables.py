"""Aggregation of run results into impact, effect, correlation and
win-tie-loss tables.  Each function accepts results from one or more tasks."""
from __future__ import annotations

import numpy as np

from fairaudit import stats
from fairaudit.errors import MetricUndefined, SplitMismatch
from fairaudit.harness import BASE, RunResults
from fairaudit.metrics import RATES

DELTA_METRICS = ("sr_P", "tpr_P", "fpr_P", "sr_U", "tpr_U", "fpr_U", "spd", "eod", "aod")
PERFORMANCE = ("accuracy", "macro_recall", "macro_precision", "macro_f1", "mcc")
FAIRNESS = ("spd", "eod", "aod")
DISPLAY = {
    "accuracy": "Accuracy",
    "macro_recall": "Recall",
    "macro_precision": "Precision",
    "macro_f1": "F1-score",
    "mcc": "MCC",
    "spd": "SPD",
    "eod": "EOD",
    "aod": "AOD",
    "overall_sr": "Overall SR",
}
LOWER_BETTER = {"fpr", "spd", "eod", "aod"}


def display(metric: str) -> str:
    if metric in DISPLAY:
        return DISPLAY[metric]
    rate, _, role = metric.partition("_")
    return f"{rate.upper()}_{role}"


def orientation(metric: str) -> str:
    head = metric.split("_")[0]
    return stats.LOWER_BETTER if head in LOWER_BETTER else stats.HIGHER_BETTER


def _role_sort_key(role: str):
    if role in ("P", "U"):
        return (0, "PU".index(role))
    return (1, int(role[1:]))


def _roles(results: list[RunResults]) -> list[str]:
    roles = {r for res in results for r in res.roles}
    return sorted(roles, key=_role_sort_key)


def group_metrics(results: list[RunResults]) -> list[str]:
    """Group-rate metric keys, ordered by rate kind then role."""
    roles = _roles(results)
    return [f"{rate}_{role}" for rate in RATES for role in roles]


def is_privileged_role(role: str) -> bool:
    return role in ("P", "G1")


def _methods(results: list[RunResults]) -> list[str]:
    out = []
    for res in results:
        for m in res.methods:
            if m != BASE and m not in out:
                out.append(m)
    return out


def impact_verdicts(results: list[RunResults]) -> dict:
    """classify_impact per (method, metric, task), skipping undefined samples."""
    out = {}
    for res in results:
        if BASE not in res.methods:
            continue
        for method in res.methods:
            if method == BASE:
                continue
            for metric in group_metrics([res]):
                before = res.values(BASE, metric)
                after = res.values(method, metric)
                if not before or not after:
                    continue
                out[(method, metric, res.name)] = stats.classify_impact(before, after)
    return out


def frequency_table(results: list[RunResults], verdicts=None) -> dict:
    """Counts of significant increase / tie / decrease across tasks."""
    verdicts = impact_verdicts(results) if verdicts is None else verdicts
    metrics = group_metrics(results)
    rows = {}
    for method in _methods(results):
        row = {}
        for metric in metrics:
            cell = {"increase": 0, "tie": 0, "decrease": 0}
            for (m, met, _task), v in verdicts.items():
                if m == method and met == metric:
                    cell[v.direction.lower()] += 1
            if sum(cell.values()):
                row[display(metric)] = cell
        rows[method] = row
    return {"tasks": [r.name for r in results], "rows": rows}


def effect_table(results: list[RunResults], verdicts=None) -> dict:
    """Mean change, extreme change and share of large significant changes.

    Privileged roles (P, G1) report the largest decrease; the others the
    largest increase.  ``large_pct`` counts tasks whose change is significant
    in that direction with |delta| >= 0.428.
    """
    verdicts = impact_verdicts(results) if verdicts is None else verdicts
    metrics = group_metrics(results)
    rows = {}
    for method in _methods(results):
        row = {}
        for metric in metrics:
            cells = [v for (m, met, _t), v in verdicts.items() if m == method and met == metric]
            if not cells:
                continue
            priv = is_privileged_role(metric.split("_", 1)[1])
            changes = [v.mean_after - v.mean_before for v in cells]
            pick = int(np.argmin(changes)) if priv else int(np.argmax(changes))
            want = stats.DECREASE if priv else stats.INCREASE
            large = sum(1 for v in cells if v.direction == want and v.large)
            row[display(metric)] = {
                "direction": "decrease" if priv else "increase",
                "mean": float(np.mean(changes)),
                "mean_after": float(np.mean([v.mean_after for v in cells])),
                "mean_before": float(np.mean([v.mean_before for v in cells])),
                "max": changes[pick],
                "max_after": cells[pick].mean_after,
                "max_before": cells[pick].mean_before,
                "large_pct": 100.0 * large / len(cells),
                "tasks": len(cells),
            }
        rows[method] = row
    return {"tasks": [r.name for r in results], "rows": rows}


def delta_observations(results: list[RunResults]) -> tuple[list[tuple[str, str]], np.ndarray, list[str]]:
    """Per (method, task): mean(after) - mean(before) for the nine delta metrics."""
    labels, rows, flags = [], [], []
    for res in results:
        if BASE not in res.methods or set(res.roles) != {"P", "U"}:
            flags.append(f"correlation_skipped_task:{res.name}")
            continue
        for method in res.methods:
            if method == BASE:
                continue
            row = []
            for metric in DELTA_METRICS:
                before, after = res.values(BASE, metric), res.values(method, metric)
                row.append(float(np.mean(after) - np.mean(before)) if before and after else np.nan)
            if np.isnan(row).any():
                flags.append(f"correlation_incomplete:{method}:{res.name}")
                continue
            labels.append((method, res.name))
            rows.append(row)
    return labels, np.array(rows, dtype=np.float64).reshape(-1, len(DELTA_METRICS)), flags


def correlation_matrix(results: list[RunResults]) -> dict:
    labels, deltas, flags = delta_observations(results)
    k = len(DELTA_METRICS)
    if len(labels) < 3:
        raise MetricUndefined(f"need at least 3 (method, task) observations, got {len(labels)}")
    rho = [[None] * k for _ in range(k)]
    p = [[None] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            try:
                res = stats.spearman(deltas[:, i], deltas[:, j])
            except MetricUndefined:
                continue
            rho[i][j] = rho[j][i] = res.statistic
            p[i][j] = p[j][i] = res.p_value
    for i, metric in enumerate(DELTA_METRICS):
        if len(np.unique(deltas[:, i])) < 2:
            flags.append(f"constant_delta_series:{display(metric)}")
    significant = [[(x is not None and x < stats.ALPHA) for x in row] for row in p]
    return {
        "metrics": [display(m) for m in DELTA_METRICS],
        "observations": [{"method": m, "task": t} for m, t in labels],
        "deltas": deltas.tolist(),
        "rho": rho,
        "p": p,
        "significant": significant,
        "flags": flags,
    }


def compare_methods(a: list[tuple[RunResults, str]], b: list[tuple[RunResults, str]]) -> dict:
    """Win/tie/loss of candidate ``a`` against reference ``b``, task by task.

    Pairs must share splits run by run; otherwise ``SplitMismatch``.
    """
    if len(a) != len(b):
        raise SplitMismatch(f"candidate has {len(a)} task(s), reference {len(b)}")
    metric_order, per_task = [], []
    for (ra, ma), (rb, mb) in zip(a, b):
        if ra.fingerprints() != rb.fingerprints():
            raise SplitMismatch(f"tasks {ra.name!r} and {rb.name!r} were not run on the same splits")
        for res, m in ((ra, ma), (rb, mb)):
            if m not in res.methods:
                raise SplitMismatch(f"method {m!r} not found in results for {res.name!r}")
        metrics = group_metrics([ra]) + list(PERFORMANCE) + list(FAIRNESS)
        for met in metrics:
            if met not in metric_order:
                metric_order.append(met)
        verdicts = {}
        for met in metrics:
            ca, cb = ra.values(ma, met), rb.values(mb, met)
            if ca and cb:
                v = stats.win_tie_loss(ca, cb, orientation(met))
                verdicts[display(met)] = {
                    "outcome": v.outcome,
                    "p_value": v.p_value,
                    "mean_candidate": v.mean_candidate,
                    "mean_reference": v.mean_reference,
                }
        entry = {
            "task": ra.name,
            "verdicts": verdicts,
            "overall_sr_candidate": float(np.mean(ra.values(ma, "overall_sr"))),
            "overall_sr_reference": float(np.mean(rb.values(mb, "overall_sr"))),
        }
        if BASE in ra.methods and ra.values(BASE, "overall_sr"):
            entry["overall_sr_base"] = float(np.mean(ra.values(BASE, "overall_sr")))
        per_task.append(entry)

    counts = {}
    for met in metric_order:
        name = display(met)
        cell = {"win": 0, "tie": 0, "loss": 0}
        for t in per_task:
            v = t["verdicts"].get(name)
            if v:
                cell[v["outcome"].lower()] += 1
        if sum(cell.values()):
            counts[name] = cell

    cand = [e["overall_sr_candidate"] for e in per_task]
    ref = [e["overall_sr_reference"] for e in per_task]
    summary = {
        "mean_overall_sr_candidate": float(np.mean(cand)),
        "mean_overall_sr_reference": float(np.mean(ref)),
        "mean_overall_sr_difference": float(np.mean(np.subtract(cand, ref))),
    }
    if all("overall_sr_base" in e for e in per_task):
        base = [e["overall_sr_base"] for e in per_task]
        summary["mean_increase_vs_base_candidate"] = float(np.mean(np.subtract(cand, base)))
        summary["mean_increase_vs_base_reference"] = float(np.mean(np.subtract(ref, base)))
    return {
        "candidate": [f"{r.name}#{m}" for r, m in a],
        "reference": [f"{r.name}#{m}" for r, m in b],
        "counts": counts,
        "overall_sr": summary,
        "tasks": per_task,
    }
