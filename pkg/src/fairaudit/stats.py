"""Nonparametric tests and the verdict rules built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import stdtr

from fairaudit import kernels
from fairaudit.errors import MetricUndefined

ALPHA = 0.05
LARGE_DELTA = 0.428
EXACT_MAX_N = 16

INCREASE, DECREASE, TIE = "Increase", "Decrease", "Tie"
WIN, LOSS = "Win", "Loss"
HIGHER_BETTER, LOWER_BETTER = "higher-better", "lower-better"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float

    __test__ = False  # not a pytest class


def _sample(x, name):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    return x


def rankdata(x) -> np.ndarray:
    """1-based ranks; tied values share the average of their ranks."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def _u_counts(n1: int, n2: int) -> tuple[int, ...]:
    """Number of rank placements giving each U in 0..n1*n2 (no ties)."""
    # table[j][u] holds counts for sizes (i, j) while sweeping i upward
    table = [[1] + [0] * (n1 * n2) for _ in range(n2 + 1)]
    for i in range(1, n1 + 1):
        new = [[0] * (n1 * n2 + 1) for _ in range(n2 + 1)]
        new[0][0] = 1
        for j in range(1, n2 + 1):
            for u in range(i * j + 1):
                # largest element belongs to sample 1 (adds j to U) or sample 2
                above = table[j][u - j] if u >= j else 0
                new[j][u] = above + new[j - 1][u]
        table = new
    return tuple(table[n2])


def _exact_p(u: float, n1: int, n2: int) -> float:
    counts = _u_counts(n1, n2)
    total = math.comb(n1 + n2, n1)
    mid2 = n1 * n2
    dev = abs(2 * u - mid2)
    extreme = sum(c for k, c in enumerate(counts) if abs(2 * k - mid2) >= dev)
    return min(1.0, extreme / total)


def mann_whitney_u(a, b) -> TestResult:
    """Two-sided Mann-Whitney U test; ``statistic`` is U for ``a``.

    Exact permutation p-value when the samples are tie-free and
    ``len(a) + len(b) <= 16``; otherwise the normal approximation with tie
    and continuity corrections.
    """
    a = _sample(a, "a")
    b = _sample(b, "b")
    n1, n2 = len(a), len(b)
    both = np.concatenate([a, b])
    ranks = rankdata(both)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2)
    has_ties = len(np.unique(both)) < len(both)
    if not has_ties and n1 + n2 <= EXACT_MAX_N:
        return TestResult(u, _exact_p(u, n1, n2))

    n = n1 + n2
    _, tie_sizes = np.unique(both, return_counts=True)
    tie_term = float(np.sum(tie_sizes**3 - tie_sizes)) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return TestResult(u, 1.0)
    z = max(abs(u - n1 * n2 / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return TestResult(u, min(1.0, math.erfc(z / math.sqrt(2.0))))


def cliffs_delta(a, b) -> float:
    """(#{a_i > b_j} - #{a_i < b_j}) / (|a| |b|)."""
    a = _sample(a, "a")
    b = _sample(b, "b")
    gt, lt = kernels.dominance_counts(a, b)
    return (gt - lt) / (len(a) * len(b))


def spearman(x, y) -> TestResult:
    """Spearman's rho (Pearson on average ranks) with a t-approximation p."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    rx = rankdata(x) - (n + 1) / 2.0
    ry = rankdata(y) - (n + 1) / 2.0
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0 or syy == 0:
        raise MetricUndefined("constant input: Spearman rho undefined")
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) >= 1.0:
        return TestResult(rho, 0.0)
    df = n - 2
    t = rho * math.sqrt(df / (1.0 - rho * rho))
    return TestResult(rho, float(2.0 * stdtr(df, -abs(t))))


@dataclass(frozen=True)
class ImpactVerdict:
    direction: str
    p_value: float
    delta: float
    large: bool
    mean_before: float
    mean_after: float

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "p_value": self.p_value,
            "delta": self.delta,
            "large": self.large,
            "mean_before": self.mean_before,
            "mean_after": self.mean_after,
        }


def classify_impact(before, after) -> ImpactVerdict:
    """Increase/Decrease when p < 0.05, direction from the change in means."""
    before = _sample(before, "before")
    after = _sample(after, "after")
    p = mann_whitney_u(after, before).p_value
    delta = cliffs_delta(after, before)
    mb, ma = float(before.mean()), float(after.mean())
    if p >= ALPHA or ma == mb:
        direction = TIE
    else:
        direction = INCREASE if ma > mb else DECREASE
    return ImpactVerdict(direction, p, delta, abs(delta) >= LARGE_DELTA, mb, ma)


@dataclass(frozen=True)
class WtlVerdict:
    outcome: str
    orientation: str
    p_value: float
    mean_candidate: float
    mean_reference: float


def win_tie_loss(candidate, reference, orientation: str) -> WtlVerdict:
    if orientation not in (HIGHER_BETTER, LOWER_BETTER):
        raise ValueError(f"unknown orientation {orientation!r}")
    candidate = _sample(candidate, "candidate")
    reference = _sample(reference, "reference")
    p = mann_whitney_u(candidate, reference).p_value
    mc, mr = float(candidate.mean()), float(reference.mean())
    if p >= ALPHA or mc == mr:
        outcome = TIE
    else:
        better = mc > mr if orientation == HIGHER_BETTER else mc < mr
        outcome = WIN if better else LOSS
    return WtlVerdict(outcome, orientation, p, mc, mr)
