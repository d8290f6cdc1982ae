"""Bias mitigation: reweighing, group thresholds, NaiveBase, selective
application and a counterfactual two-model ensemble."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fairaudit.data import Dataset, FeatureEncoder, GroupAssignment, SplitConfig, split_indices
from fairaudit.errors import MetricUndefined
from fairaudit.metrics import PredictionSet, group_rates, multi_fairness
from fairaudit.model import Hyper, LogisticModel, apply_threshold, fit_logistic, predict_proba

THRESHOLD_GRID = np.round(np.arange(101) / 100.0, 2)
LAMBDA_GRID = np.round(np.arange(11) / 10.0, 1)
VALIDATION_FRACTION = 0.2
ACCURACY_SLACK = 0.02
_TIE = 1e-12


# -- reweighing -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InstanceWeights:
    values: np.ndarray
    cell_weights: dict
    flags: tuple[str, ...] = ()


def reweigh_table(keys, labels) -> tuple[dict, tuple[str, ...]]:
    """w(g, l) = P(g) P(l) / P(g, l) from empirical frequencies.

    Empty cells get weight 0 and a flag.
    """
    keys = np.asarray(keys, dtype=object)
    labels = np.asarray(labels)
    n = len(labels)
    if n == 0:
        raise ValueError("empty training set")
    weights, flags = {}, []
    for g in sorted(set(keys)):
        in_g = keys == g
        for lab in (0, 1):
            joint = int(np.sum(in_g & (labels == lab)))
            if joint == 0:
                weights[(g, lab)] = 0.0
                flags.append(f"reweigh_empty_cell:{g}:label={lab}")
                continue
            n_g = int(np.sum(in_g))
            n_l = int(np.sum(labels == lab))
            weights[(g, lab)] = (n_g * n_l) / (n * joint)
    return weights, tuple(flags)


def reweigh(train: Dataset, groups: GroupAssignment) -> InstanceWeights:
    keys = groups.keys_for(train)
    cells, flags = reweigh_table(keys, train.labels)
    values = np.array([cells[(k, int(lab))] for k, lab in zip(keys, train.labels)], dtype=np.float64)
    return InstanceWeights(values, cells, flags)


# -- group thresholds (EOP) ----------------------------------------------

@dataclass(frozen=True)
class EOPolicy:
    """Decision threshold per group role; the reference role stays at 0.5."""

    thresholds: dict
    reference: str
    objective: float
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "thresholds": dict(self.thresholds),
            "reference": self.reference,
            "objective": self.objective,
            "flags": list(self.flags),
        }


def _rates_on_grid(prob, y_true, grid):
    """(tpr, fpr) arrays over the grid; None where the denominator is zero."""
    above = prob[:, None] > grid[None, :]
    pos, neg = y_true == 1, y_true == 0
    tpr = above[pos].sum(axis=0) / pos.sum() if pos.any() else None
    fpr = above[neg].sum(axis=0) / neg.sum() if neg.any() else None
    return tpr, fpr


def _closest_to_default(candidates):
    return min(candidates, key=lambda t: (abs(t - 0.5), t))


def eop_fit(val: PredictionSet, groups: GroupAssignment) -> EOPolicy:
    """Per-group thresholds on a 0.01 grid matching the reference group's
    TPR and FPR (at threshold 0.5) as closely as possible.

    The objective per group is ``|TPR_ref - TPR_g| + |FPR_ref - FPR_g|``;
    ties go to the threshold closest to 0.5, then the lower one.
    """
    prob = np.asarray(val.y_prob, dtype=np.float64)
    y_true = np.asarray(val.y_true)
    roles = np.array([groups.roles.get(k) for k in val.group_of], dtype=object)
    reference = groups.roles[groups.groups[0]]
    flags = []
    thresholds = {groups.roles[g]: 0.5 for g in groups.groups}

    ref = roles == reference
    if not ref.any():
        return EOPolicy(thresholds, reference, 0.0, (f"eop_group_missing:{reference}",))
    ref_tpr, ref_fpr = _rates_on_grid(prob[ref], y_true[ref], np.array([0.5]))

    total = 0.0
    for key in groups.groups[1:]:
        role = groups.roles[key]
        mask = roles == role
        if not mask.any():
            flags.append(f"eop_group_missing:{role}")
            continue
        tpr, fpr = _rates_on_grid(prob[mask], y_true[mask], THRESHOLD_GRID)
        obj = np.zeros(len(THRESHOLD_GRID))
        if tpr is not None and ref_tpr is not None:
            obj += np.abs(ref_tpr[0] - tpr)
        else:
            flags.append(f"eop_tpr_undefined:{role}")
        if fpr is not None and ref_fpr is not None:
            obj += np.abs(ref_fpr[0] - fpr)
        else:
            flags.append(f"eop_fpr_undefined:{role}")
        best = obj.min()
        thresholds[role] = float(_closest_to_default(THRESHOLD_GRID[obj <= best + _TIE]))
        total += float(best)
    return EOPolicy(thresholds, reference, total, tuple(flags))


def eop_apply(pol: EOPolicy, p: PredictionSet, groups: GroupAssignment) -> PredictionSet:
    t = np.array([pol.thresholds.get(groups.roles.get(k), 0.5) for k in p.group_of], dtype=np.float64)
    y_pred = (np.asarray(p.y_prob) > t).astype(np.int8)
    return p.with_predictions(y_pred)


# -- NaiveBase -------------------------------------------------------------

@dataclass(frozen=True)
class NaiveBasePolicy:
    """Unprivileged threshold equalizing selection rates on validation.

    ``threshold is None`` is the select-none sentinel (empty top range).
    """

    threshold: float | None
    privileged_sr: float
    k: int
    n_unprivileged: int

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "privileged_sr": self.privileged_sr,
            "k": self.k,
            "n_unprivileged": self.n_unprivileged,
        }


def naivebase_policy(privileged_pred, unprivileged_prob) -> NaiveBasePolicy:
    privileged_pred = np.asarray(privileged_pred)
    unprivileged_prob = np.asarray(unprivileged_prob, dtype=np.float64)
    if len(privileged_pred) == 0 or len(unprivileged_prob) == 0:
        raise ValueError("validation data lacks one of the two groups")
    x = float(np.mean(privileged_pred))
    k = int(math.floor(x * len(unprivileged_prob) + 0.5))
    if k == 0:
        return NaiveBasePolicy(None, x, 0, len(unprivileged_prob))
    top = np.sort(unprivileged_prob)[::-1]
    return NaiveBasePolicy(float(top[k - 1]), x, k, len(unprivileged_prob))


def naivebase_select(pol: NaiveBasePolicy, prob) -> np.ndarray:
    prob = np.asarray(prob, dtype=np.float64)
    if pol.threshold is None:
        return np.zeros(len(prob), dtype=np.int8)
    # ">=" keeps the boundary instance that defines the threshold
    return (prob >= pol.threshold).astype(np.int8)


def _require_two_roles(groups: GroupAssignment):
    if not groups.single_attribute:
        raise ValueError("NaiveBase is defined for single-attribute (two-group) tasks only")


def naivebase_fit(
    train: Dataset,
    groups: GroupAssignment,
    encoder: FeatureEncoder | None = None,
    hyper: Hyper = Hyper(),
    seed: int = 0,
) -> tuple[LogisticModel, NaiveBasePolicy]:
    _require_two_roles(groups)
    encoder = encoder or FeatureEncoder.fit(train)
    fit_idx, val_idx = split_indices(train.N, SplitConfig(1.0 - VALIDATION_FRACTION, seed))
    fit_part, val_part = train.subset(fit_idx), train.subset(val_idx)
    model = fit_logistic(
        encoder.transform(fit_part), fit_part.labels, None, hyper, seed, encoder.fingerprint()
    )
    prob = predict_proba(model, encoder.transform(val_part))
    roles = np.array([groups.roles[k] for k in groups.keys_for(val_part)], dtype=object)
    pol = naivebase_policy(apply_threshold(prob[roles == "P"]), prob[roles == "U"])
    return model, pol


def naivebase_apply(
    model: LogisticModel,
    pol: NaiveBasePolicy,
    d: Dataset,
    groups: GroupAssignment,
    encoder: FeatureEncoder,
    run_id: int = 0,
) -> PredictionSet:
    _require_two_roles(groups)
    keys = groups.keys_for(d)
    prob = predict_proba(model, encoder.transform(d))
    unpriv = np.array([groups.roles[k] == "U" for k in keys])
    y_pred = apply_threshold(prob)
    y_pred[unpriv] = naivebase_select(pol, prob[unpriv])
    return PredictionSet(np.asarray(d.labels), y_pred, prob, keys, run_id)


# -- selective application -------------------------------------------------

@dataclass(frozen=True)
class SelectiveScope:
    target_groups: tuple[str, ...]

    def __post_init__(self):
        if not self.target_groups:
            raise ValueError("selective scope must name at least one group")


def selective_apply(
    base: PredictionSet, mitigated: PredictionSet, groups: GroupAssignment, scope: SelectiveScope
) -> PredictionSet:
    """Mitigated outputs for in-scope groups, baseline outputs elsewhere."""
    if (
        len(base) != len(mitigated)
        or not np.array_equal(base.y_true, mitigated.y_true)
        or not np.array_equal(base.group_of, mitigated.group_of)
    ):
        raise ValueError("base and mitigated prediction sets are misaligned")
    keys = groups.keys_with_roles(scope.target_groups)
    inside = np.array([k in keys for k in base.group_of], dtype=bool)
    y_pred = np.where(inside, mitigated.y_pred, base.y_pred).astype(np.int8)
    y_prob = np.where(inside, mitigated.y_prob, base.y_prob)
    return PredictionSet(base.y_true, y_pred, y_prob, base.group_of, base.run_id)


# -- counterfactual ensemble -----------------------------------------------

@dataclass(frozen=True, eq=False)
class CounterfactualEnsemble:
    """Factual and counterfactual models mixed as ``lam*p_f + (1-lam)*p_cf``."""

    factual: LogisticModel
    counterfactual: LogisticModel
    lam: float
    encoder: FeatureEncoder
    selection: tuple = field(default=(), repr=False)
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "selection": [list(row) for row in self.selection],
            "flags": list(self.flags),
        }


def counterfactual_frame(d: Dataset, observed: dict):
    """Copy of ``d.frame`` with every sensitive value moved to the next
    observed value (the complement for binary attributes)."""
    frame = d.frame.copy()
    for name, values in observed.items():
        if len(values) < 2:
            continue
        nxt = {v: values[(i + 1) % len(values)] for i, v in enumerate(values)}
        frame[name] = frame[name].map(lambda v: nxt.get(v, v))
    return frame


def select_lambda(y_true, p_factual, p_counter, keys, groups: GroupAssignment, grid=LAMBDA_GRID):
    """Pick the mixing weight minimizing SPD among weights whose accuracy is
    within 0.02 of the factual model's; ties go to the weight closest to 0.5.

    Returns ``(lam, table, flags)`` where ``table`` rows are ``(lam, acc, spd)``.
    """
    y_true = np.asarray(y_true)
    rows = []
    for lam in grid:
        prob = lam * np.asarray(p_factual) + (1.0 - lam) * np.asarray(p_counter)
        y_pred = apply_threshold(prob)
        acc = float(np.mean(y_pred == y_true))
        ps = PredictionSet(y_true, y_pred, prob, keys)
        try:
            spd_ = multi_fairness(group_rates(ps, groups)).spd
        except MetricUndefined:
            spd_ = None
        rows.append((float(lam), acc, spd_))
    acc_factual = next(acc for lam, acc, _ in rows if lam == 1.0)
    feasible = [r for r in rows if r[1] >= acc_factual - ACCURACY_SLACK - _TIE and r[2] is not None]
    if not feasible:
        return 1.0, tuple(rows), ("lambda_spd_undefined",)
    best = min(r[2] for r in feasible)
    lam = _closest_to_default([r[0] for r in feasible if r[2] <= best + _TIE])
    return float(lam), tuple(rows), ()


def counterfactual_ensemble_fit(
    train: Dataset,
    groups: GroupAssignment,
    encoder: FeatureEncoder | None = None,
    hyper: Hyper = Hyper(),
    seed: int = 0,
) -> CounterfactualEnsemble:
    encoder = encoder or FeatureEncoder.fit(train)
    flags = []
    feature_names = {n for n, _ in train.schema.feature_columns}
    observed = {}
    for name, _ in groups.attributes:
        values = sorted(set(train.frame[name].tolist()), key=str)
        if name not in feature_names:
            flags.append(f"sensitive_not_in_features:{name}")
        elif len(values) < 2:
            flags.append(f"degenerate_sensitive_attribute:{name}")
        else:
            observed[name] = values

    fit_idx, val_idx = split_indices(train.N, SplitConfig(1.0 - VALIDATION_FRACTION, seed))
    fit_part, val_part = train.subset(fit_idx), train.subset(val_idx)
    fp = encoder.fingerprint()
    factual = fit_logistic(encoder.transform(fit_part), fit_part.labels, None, hyper, seed, fp)
    if not observed:
        # nothing to flip: the counterfactual model is the factual one
        return CounterfactualEnsemble(factual, factual, 1.0, encoder, (), tuple(flags))

    cf_X = encoder.transform(fit_part, counterfactual_frame(fit_part, observed))
    counter = fit_logistic(cf_X, fit_part.labels, None, hyper, seed, fp)

    X_val = encoder.transform(val_part)
    lam, table, lam_flags = select_lambda(
        val_part.labels,
        predict_proba(factual, X_val),
        predict_proba(counter, X_val),
        groups.keys_for(val_part),
        groups,
    )
    return CounterfactualEnsemble(factual, counter, lam, encoder, table, tuple(flags) + lam_flags)


def counterfactual_ensemble_predict(
    ens: CounterfactualEnsemble, d: Dataset, groups: GroupAssignment, run_id: int = 0
) -> PredictionSet:
    X = ens.encoder.transform(d)
    # lam == 1 reproduces the factual probabilities exactly (p*1 + q*0 == p)
    prob = ens.lam * predict_proba(ens.factual, X) + (1.0 - ens.lam) * predict_proba(ens.counterfactual, X)
    return PredictionSet(np.asarray(d.labels), apply_threshold(prob), prob, groups.keys_for(d), run_id)
