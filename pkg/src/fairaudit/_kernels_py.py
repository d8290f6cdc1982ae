"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_gd(X, y, w, learning_rate, epochs, l2):
    n, d = X.shape
    coef = np.zeros(d)
    bias = 0.0
    total = float(np.sum(w))
    for _ in range(epochs):
        r = w * (_sigmoid(X @ coef + bias) - y)
        grad = X.T @ r
        coef = coef - learning_rate * (grad / total + l2 * coef)
        bias -= learning_rate * (float(np.sum(r)) / total)
    return coef, bias


def dominance_counts(a, b):
    """Return (#{a_i > b_j}, #{a_i < b_j}) over all cross pairs."""
    b_sorted = np.sort(b)
    lt = np.searchsorted(b_sorted, a, side="left")
    le = np.searchsorted(b_sorted, a, side="right")
    gt_count = int(np.sum(lt))
    lt_count = int(np.sum(len(b_sorted) - le))
    return gt_count, lt_count


def confusion_by_group(codes, y_true, y_pred, n_groups):
    """Per-group (TP, FP, FN, TN) counts as an (n_groups, 4) int64 array."""
    if len(codes) and (codes.min() < 0 or codes.max() >= n_groups):
        raise ValueError(f"group code out of range [0, {n_groups})")
    cell = 2 * (1 - y_pred.astype(np.int64)) + (1 - y_true.astype(np.int64))
    flat = np.bincount(codes.astype(np.int64) * 4 + cell, minlength=4 * n_groups)
    return flat.reshape(n_groups, 4).astype(np.int64)
