"""External score files: per-run predictions produced by other tools.

Columns: ``run_id, y_true, y_pred, y_prob`` and one raw-valued column per
sensitive attribute.  ``y_true``/``y_pred`` are 0/1 with 1 = favorable.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from fairaudit.data import Dataset, DatasetSchema, assign_groups, parse_floats
from fairaudit.errors import EmptyDataset, MissingColumn, ScoreFileError
from fairaudit.harness import RunResults
from fairaudit.metrics import PredictionSet, evaluate

CORE = ("run_id", "y_true", "y_pred", "y_prob")


def _binary(col: pd.Series, name: str) -> np.ndarray:
    values = parse_floats(col)
    bad = ~np.isin(values, (0.0, 1.0))
    if bad.any():
        i = int(np.argmax(bad))
        raise ScoreFileError(f"{name} must be 0 or 1 (line {i + 2}: {col.iloc[i]!r})")
    return values.astype(np.int8)


def load_scores(path, schema: DatasetSchema):
    """Return ``(prediction sets sorted by run_id, group assignment)``.

    Groups are ranked on the file's own ``y_true`` (no training data is
    available); with one attribute the privileged value comes first.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataset(f"{path}: empty score file") from exc
    for col in (*CORE, *schema.sensitive_names):
        if col not in raw.columns:
            raise MissingColumn(col, str(path))
    if len(raw) == 0:
        raise EmptyDataset(f"{path}: no rows")

    run_ids = parse_floats(raw["run_id"])
    if np.isnan(run_ids).any() or np.any(run_ids != np.round(run_ids)):
        raise ScoreFileError("run_id must be an integer")
    y_true = _binary(raw["y_true"], "y_true")
    y_pred = _binary(raw["y_pred"], "y_pred")
    y_prob = parse_floats(raw["y_prob"])
    bad = ~(np.isfinite(y_prob) & (y_prob >= 0.0) & (y_prob <= 1.0))
    if bad.any():
        i = int(np.argmax(bad))
        raise ScoreFileError(f"y_prob out of [0, 1] at line {i + 2} (row {i}): {raw['y_prob'].iloc[i]!r}")

    attr_schema = DatasetSchema(schema.label_column, "1", (), schema.sensitive_attributes)
    frame = raw[schema.sensitive_names].copy()
    ds = Dataset(frame, attr_schema, y_true, np.arange(len(raw)), path.name.split(".")[0])
    groups = assign_groups(ds, ds)
    groups = replace(groups, flags=groups.flags + ("ranking_from_score_file",))
    keys = groups.group_of

    sets = []
    run_ids = run_ids.astype(np.int64)
    for rid in sorted(set(run_ids.tolist())):
        mask = run_ids == rid
        if mask.sum() < 2:
            raise ScoreFileError(f"run {rid} has fewer than 2 rows")
        sets.append(PredictionSet(y_true[mask], y_pred[mask], y_prob[mask], keys[mask], int(rid)))
    return sets, groups


def write_scores(sets, path) -> None:
    """Write ``[(PredictionSet, GroupAssignment), ...]`` in score-file layout."""
    path = Path(path)
    if not sets:
        raise ValueError("no prediction sets to write")
    attrs = [name for name, _ in sets[0][1].attributes]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*CORE, *attrs])
        for ps, _groups in sets:
            for i in range(len(ps)):
                values = str(ps.group_of[i]).split("/")
                writer.writerow(
                    [ps.run_id, int(ps.y_true[i]), int(ps.y_pred[i]), repr(float(ps.y_prob[i])), *values]
                )


def scores_fingerprint(ps: PredictionSet) -> str:
    h = hashlib.sha256(b"scores")
    h.update(np.asarray(ps.y_true, dtype=np.int8).tobytes())
    h.update("\x1f".join(map(str, ps.group_of)).encode())
    return h.hexdigest()[:16]


def audit(scores_path, schema: DatasetSchema, method: str = "scores", base_path=None) -> RunResults:
    """Metric reports per run for an external score file.

    With ``base_path`` (baseline scores for the same rows), the result also
    carries a ``base`` column so impact tables can be computed.
    """
    sets, groups = load_scores(scores_path, schema)
    base_sets = {}
    if base_path is not None:
        b_sets, _ = load_scores(base_path, schema)
        base_sets = {s.run_id: s for s in b_sets}
    runs = []
    for ps in sets:
        reports = {}
        failures = {}
        if base_path is not None:
            b = base_sets.get(ps.run_id)
            if b is None or scores_fingerprint(b) != scores_fingerprint(ps):
                failures["base"] = "baseline scores missing or misaligned for this run"
                reports["base"] = None
            else:
                reports["base"] = evaluate(b, groups).to_dict()
        reports[method] = evaluate(ps, groups).to_dict()
        runs.append(
            {
                "run": ps.run_id,
                "seed": None,
                "split": scores_fingerprint(ps),
                "n_train": None,
                "n_eval": len(ps),
                "groups": groups.to_dict(),
                "flags": list(groups.flags),
                "failures": failures,
                "reports": reports,
            }
        )
    task = {
        "name": Path(scores_path).name.split(".")[0],
        "dataset": Path(scores_path).name,
        "attributes": schema.sensitive_names,
        "model": "external",
        "surface": "scores",
    }
    methods = (["base"] if base_path is not None else []) + [method]
    return RunResults(task, {"scores": str(scores_path)}, methods, runs)
