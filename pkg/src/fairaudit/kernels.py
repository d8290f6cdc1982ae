"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Set ``FAIRAUDIT_KERNELS=python`` to force the fallback.
"""
import os

import numpy as np

if os.environ.get("FAIRAUDIT_KERNELS", "").lower() == "python":
    from fairaudit import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from fairaudit import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        from fairaudit import _kernels_py as _impl
        BACKEND = "python"


def logistic_gd(X, y, w, learning_rate, epochs, l2):
    """Full-batch gradient descent on weighted, L2-penalized logistic loss.

    The data term is normalized by ``sum(w)``; the bias is not penalized.
    Returns ``(coef, bias)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    coef, bias = _impl.logistic_gd(X, y, w, float(learning_rate), int(epochs), float(l2))
    return np.asarray(coef), float(bias)


def dominance_counts(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    gt, lt = _impl.dominance_counts(a, b)
    return int(gt), int(lt)


def confusion_by_group(codes, y_true, y_pred, n_groups):
    codes = np.ascontiguousarray(codes, dtype=np.int_)
    y_true = np.ascontiguousarray(y_true, dtype=np.int8)
    y_pred = np.ascontiguousarray(y_pred, dtype=np.int8)
    return np.asarray(_impl.confusion_by_group(codes, y_true, y_pred, int(n_groups)))
