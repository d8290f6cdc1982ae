"""Independent brute-force recomputations used as test oracles.

Deliberately loop-based and free of package code so a shared bug cannot
hide in both sides of a comparison.
"""
from __future__ import annotations

import itertools
import math


def confusion(y_true, y_pred):
    tp = fp = fn = tn = 0
    for t, p in zip(y_true, y_pred):
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 1:
            fp += 1
        elif t == 1 and p == 0:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def rates(y_true, y_pred):
    tp, fp, fn, tn = confusion(y_true, y_pred)
    n = tp + fp + fn + tn
    sr = (tp + fp) / n if n else None
    tpr = tp / (tp + fn) if tp + fn else None
    fpr = fp / (fp + tn) if fp + tn else None
    return sr, tpr, fpr


def fairness(per_group):
    """per_group: list of (sr, tpr, fpr) tuples in any order."""
    def gap(idx):
        vals = [g[idx] for g in per_group if g[idx] is not None]
        if len(vals) < 2:
            return None
        best = 0.0
        for a in vals:
            for b in vals:
                best = max(best, abs(a - b))
        return best

    both = [g for g in per_group if g[1] is not None and g[2] is not None]
    aod = None
    if len(both) >= 2:
        aod = 0.0
        for a in both:
            for b in both:
                aod = max(aod, abs(((a[1] - b[1]) + (a[2] - b[2])) / 2))
    return gap(0), gap(1), aod


def performance(y_true, y_pred):
    tp, fp, fn, tn = confusion(y_true, y_pred)
    n = tp + fp + fn + tn

    def prf(tp_, fp_, fn_):
        pr = tp_ / (tp_ + fp_) if tp_ + fp_ > 0 else 0.0
        rc = tp_ / (tp_ + fn_) if tp_ + fn_ > 0 else 0.0
        f = 2 * pr * rc / (pr + rc) if pr + rc > 0 else 0.0
        return pr, rc, f

    pos = prf(tp, fp, fn)
    neg = prf(tn, fn, fp)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = 0.0 if den == 0 else (tp * tn - fp * fn) / math.sqrt(den)
    return {
        "accuracy": (tp + tn) / n,
        "macro_precision": (pos[0] + neg[0]) / 2,
        "macro_recall": (pos[1] + neg[1]) / 2,
        "macro_f1": (pos[2] + neg[2]) / 2,
        "mcc": mcc,
    }


def cliffs_delta(a, b):
    gt = lt = 0
    for x in a:
        for y in b:
            if x > y:
                gt += 1
            elif x < y:
                lt += 1
    return (gt - lt) / (len(a) * len(b))


def u_statistic(a, b):
    u = 0.0
    for x in a:
        for y in b:
            u += 1.0 if x > y else (0.5 if x == y else 0.0)
    return u


def mwu_exact_p(a, b):
    """Two-sided permutation p over all ways to relabel the pooled sample."""
    pooled = list(a) + list(b)
    n1, n2 = len(a), len(b)
    centre = n1 * n2 / 2
    observed = abs(u_statistic(a, b) - centre)
    hits = total = 0
    for idx in itertools.combinations(range(n1 + n2), n1):
        chosen = set(idx)
        aa = [pooled[i] for i in idx]
        bb = [pooled[i] for i in range(n1 + n2) if i not in chosen]
        total += 1
        if abs(u_statistic(aa, bb) - centre) >= observed - 1e-9:
            hits += 1
    return hits / total


def average_ranks(x):
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def spearman_rho(x, y):
    return pearson(average_ranks(x), average_ranks(y))


def mwu_null_counts(n1, n2):
    """Counts of each U over every placement of n1 labels among n1+n2 ranks."""
    counts = {}
    for idx in itertools.combinations(range(n1 + n2), n1):
        # rank r of sample-1 element beats the r - (its position) sample-2 elements below it
        u = sum(r - pos for pos, r in enumerate(idx))
        counts[u] = counts.get(u, 0) + 1
    return counts
