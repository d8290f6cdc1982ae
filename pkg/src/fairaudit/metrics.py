"""Group benefit rates, fairness gaps and overall performance."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from fairaudit import kernels
from fairaudit.data import GroupAssignment
from fairaudit.errors import MetricUndefined

RATES = ("sr", "tpr", "fpr")


@dataclass(frozen=True, eq=False)
class PredictionSet:
    y_true: np.ndarray
    y_pred: np.ndarray
    y_prob: np.ndarray
    group_of: np.ndarray
    run_id: int = 0

    def __post_init__(self):
        n = len(self.y_true)
        if not (len(self.y_pred) == len(self.y_prob) == len(self.group_of) == n):
            raise ValueError("prediction vectors differ in length")
        for name in ("y_true", "y_pred"):
            v = np.asarray(getattr(self, name))
            if v.size and not np.isin(v, (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        prob = np.asarray(self.y_prob, dtype=np.float64)
        if prob.size and (not np.isfinite(prob).all() or prob.min() < 0 or prob.max() > 1):
            raise ValueError("y_prob must be finite and within [0, 1]")

    def __len__(self):
        return len(self.y_true)

    def with_predictions(self, y_pred, y_prob=None) -> "PredictionSet":
        return PredictionSet(
            self.y_true,
            np.asarray(y_pred, dtype=np.int8),
            self.y_prob if y_prob is None else np.asarray(y_prob, dtype=np.float64),
            self.group_of,
            self.run_id,
        )

    def subset(self, mask) -> "PredictionSet":
        return PredictionSet(
            self.y_true[mask], self.y_pred[mask], self.y_prob[mask], self.group_of[mask], self.run_id
        )


@dataclass(frozen=True)
class Rates:
    sr: float | None
    tpr: float | None
    fpr: float | None
    n: int
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class GroupRates:
    """Per-role rates, ordered most- to least-favored."""

    rates: dict
    flags: tuple[str, ...] = ()

    @property
    def roles(self) -> list[str]:
        return list(self.rates)

    def __getitem__(self, role) -> Rates:
        return self.rates[role]


def _ratio(num, den):
    return num / den if den else None


def group_rates(p: PredictionSet, groups: GroupAssignment) -> GroupRates:
    if len(p) == 0:
        raise ValueError("empty prediction set")
    codes = groups.role_codes(p.group_of)
    counts = kernels.confusion_by_group(codes, p.y_true, p.y_pred, groups.n)
    rates, flags = {}, []
    for key, (tp, fp, fn, tn) in zip(groups.groups, counts.tolist()):
        role = groups.roles[key]
        n, pos, neg = tp + fp + fn + tn, tp + fn, fp + tn
        r = Rates(_ratio(tp + fp, n), _ratio(tp, pos), _ratio(fp, neg), n, pos, neg)
        if n == 0:
            flags.append(f"sr_undefined:{role}:no_instances")
        if pos == 0:
            flags.append(f"tpr_undefined:{role}:no_Y=1")
        if neg == 0:
            flags.append(f"fpr_undefined:{role}:no_Y=0")
        rates[role] = r
    return GroupRates(rates, tuple(flags))


def _pair(r: GroupRates, attr):
    if len(r.rates) != 2:
        raise MetricUndefined(f"expected exactly two groups, got {len(r.rates)}")
    priv, unpriv = r.rates.values()
    a, b = getattr(priv, attr), getattr(unpriv, attr)
    if a is None or b is None:
        raise MetricUndefined(f"{attr} undefined for a group")
    return a, b


def spd(r: GroupRates) -> float:
    a, b = _pair(r, "sr")
    return abs(a - b)


def eod(r: GroupRates) -> float:
    a, b = _pair(r, "tpr")
    return abs(a - b)


def aod(r: GroupRates) -> float:
    tpr_p, tpr_u = _pair(r, "tpr")
    fpr_p, fpr_u = _pair(r, "fpr")
    return abs(0.5 * ((tpr_p - tpr_u) + (fpr_p - fpr_u)))


@dataclass(frozen=True)
class FairnessScores:
    spd: float | None
    eod: float | None
    aod: float | None
    flags: tuple[str, ...] = ()


def multi_fairness(r: GroupRates) -> FairnessScores:
    """Largest gap across groups; reduces to spd/eod/aod for two groups.

    AOD takes the pairwise averaged TPR/FPR difference, maximized over pairs.
    Groups with an undefined rate drop out of that component.
    """
    if len(r.rates) < 2:
        raise MetricUndefined(f"need at least two groups, got {len(r.rates)}")
    flags = []

    def spread(attr):
        vals = [getattr(x, attr) for x in r.rates.values() if getattr(x, attr) is not None]
        if len(vals) < 2:
            flags.append(f"{'spd' if attr == 'sr' else 'eod'}_undefined:fewer_than_two_groups")
            return None
        return max(vals) - min(vals)

    spd_ = spread("sr")
    eod_ = spread("tpr")
    both = [x for x in r.rates.values() if x.tpr is not None and x.fpr is not None]
    if len(both) < 2:
        flags.append("aod_undefined:fewer_than_two_groups")
        aod_ = None
    else:
        aod_ = max(
            abs(0.5 * ((i.tpr - j.tpr) + (i.fpr - j.fpr))) for i, j in itertools.combinations(both, 2)
        )
    return FairnessScores(spd_, eod_, aod_, tuple(flags))


@dataclass(frozen=True)
class PerformanceScores:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mcc: float


def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def performance(p: PredictionSet) -> PerformanceScores:
    if len(p) == 0:
        raise ValueError("empty prediction set")
    codes = np.zeros(len(p), dtype=np.int64)
    tp, fp, fn, tn = kernels.confusion_by_group(codes, p.y_true, p.y_pred, 1)[0].tolist()
    p1, r1, f1 = _prf(tp, fp, fn)
    p0, r0, f0 = _prf(tn, fn, fp)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den) if den else 0.0
    return PerformanceScores(
        accuracy=(tp + tn) / len(p),
        macro_precision=(p0 + p1) / 2,
        macro_recall=(r0 + r1) / 2,
        macro_f1=(f0 + f1) / 2,
        mcc=mcc,
    )


@dataclass(frozen=True)
class MetricReport:
    rates: GroupRates
    fairness: FairnessScores
    performance: PerformanceScores
    overall_sr: float
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        out = {}
        for role, r in self.rates.rates.items():
            for attr in RATES:
                out[f"{attr}_{role}"] = getattr(r, attr)
        out["spd"] = self.fairness.spd
        out["eod"] = self.fairness.eod
        out["aod"] = self.fairness.aod
        perf = self.performance
        out["accuracy"] = perf.accuracy
        out["macro_precision"] = perf.macro_precision
        out["macro_recall"] = perf.macro_recall
        out["macro_f1"] = perf.macro_f1
        out["mcc"] = perf.mcc
        out["overall_sr"] = self.overall_sr
        out["flags"] = list(self.flags)
        return out


def evaluate(p: PredictionSet, groups: GroupAssignment) -> MetricReport:
    rates = group_rates(p, groups)
    flags = list(rates.flags)
    try:
        fair = multi_fairness(rates)
    except MetricUndefined as exc:
        fair = FairnessScores(None, None, None, (f"fairness_undefined:{exc}",))
    flags.extend(fair.flags)
    return MetricReport(rates, fair, performance(p), float(np.mean(p.y_pred)), tuple(flags))
