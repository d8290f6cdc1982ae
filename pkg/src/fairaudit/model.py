"""Weighted logistic regression, the built-in trainer."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from fairaudit import kernels

# Largest double below 1 and smallest positive normal: keeps probabilities
# inside the open interval (0, 1).
_P_HI = 1.0 - 2.0**-53
_P_LO = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class Hyper:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    hyper: Hyper = Hyper()
    seed: int = 0
    feature_hash: str = ""
    flags: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return len(self.weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "weights": [float(v) for v in self.weights],
                "bias": self.bias,
                "hyper": {
                    "learning_rate": self.hyper.learning_rate,
                    "epochs": self.hyper.epochs,
                    "l2": self.hyper.l2,
                },
                "seed": self.seed,
                "feature_hash": self.feature_hash,
                "flags": list(self.flags),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "LogisticModel":
        raw = json.loads(text)
        weights = np.asarray(raw["weights"], dtype=np.float64)
        weights.setflags(write=False)
        return cls(
            weights=weights,
            bias=float(raw["bias"]),
            hyper=Hyper(**raw["hyper"]),
            seed=int(raw["seed"]),
            feature_hash=raw.get("feature_hash", ""),
            flags=tuple(raw.get("flags", ())),
        )


def fit_logistic(X, y, w=None, hyper: Hyper = Hyper(), seed: int = 0, feature_hash: str = "") -> LogisticModel:
    """Fit from zero initialization with ``hyper.epochs`` full-batch steps.

    Minimizes ``sum_i w_i * logloss_i / sum_i w_i + l2/2 * ||weights||^2``.
    ``seed`` is recorded for audit trails; the procedure itself draws no
    random numbers.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=np.float64)
    if not (X.shape[0] == len(y) == len(w)):
        raise ValueError(f"dimension mismatch: X has {X.shape[0]} rows, y {len(y)}, w {len(w)}")
    if np.any(w < 0) or not np.sum(w) > 0:
        raise ValueError("instance weights must be non-negative with a positive sum")
    flags = []
    active = y[w > 0]
    if len(np.unique(active)) < 2:
        warnings.warn("training labels contain a single class", RuntimeWarning, stacklevel=2)
        flags.append("one_class_labels")

    coef, bias = kernels.logistic_gd(X, y, w, hyper.learning_rate, hyper.epochs, hyper.l2)
    coef.setflags(write=False)
    return LogisticModel(coef, bias, hyper, int(seed), feature_hash, tuple(flags))


def predict_proba(m: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.dim:
        raise ValueError(f"expected {m.dim} features, got shape {X.shape}")
    z = X @ m.weights + m.bias
    p = np.empty_like(z)
    pos = z >= 0
    p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    p[~pos] = e / (1.0 + e)
    return np.clip(p, _P_LO, _P_HI)


def apply_threshold(prob, t: float = 0.5) -> np.ndarray:
    """Label 1 iff probability > ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    return (np.asarray(prob) > t).astype(np.int8)


def predict(m: LogisticModel, X, threshold: float = 0.5) -> np.ndarray:
    return apply_threshold(predict_proba(m, X), threshold)
