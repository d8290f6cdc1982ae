"""Dataset loading, seeded splits, group assignment and feature encoding."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from fairaudit.errors import (
    EmptyDataset,
    MissingColumn,
    NonBinaryLabel,
    SchemaError,
    UnparseableNumeric,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"
RECIPES = ("adult", "german")


@dataclass(frozen=True)
class DatasetSchema:
    label_column: str
    favorable_value: str
    feature_columns: tuple[tuple[str, str], ...]
    sensitive_attributes: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.sensitive_attributes:
            raise SchemaError("at least one sensitive attribute is required")
        sensitive = [name for name, _ in self.sensitive_attributes]
        if self.label_column in sensitive:
            raise SchemaError(f"label column {self.label_column!r} is also declared sensitive")
        if len(set(sensitive)) != len(sensitive):
            raise SchemaError("duplicate sensitive attribute")
        for name, kind in self.feature_columns:
            if kind not in (NUMERIC, CATEGORICAL):
                raise SchemaError(f"feature {name!r}: unknown kind {kind!r}")
            if name == self.label_column:
                raise SchemaError(f"label column {name!r} listed as a feature")

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetSchema":
        try:
            return cls(
                label_column=str(raw["label"]),
                favorable_value=str(raw["favorable"]),
                feature_columns=tuple((str(f["name"]), str(f["kind"])) for f in raw["features"]),
                sensitive_attributes=tuple(
                    (str(s["name"]), str(s["privileged"])) for s in raw["sensitive"]
                ),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema: missing key {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "label": self.label_column,
            "favorable": self.favorable_value,
            "features": [{"name": n, "kind": k} for n, k in self.feature_columns],
            "sensitive": [{"name": n, "privileged": p} for n, p in self.sensitive_attributes],
        }

    @property
    def sensitive_names(self) -> list[str]:
        return [name for name, _ in self.sensitive_attributes]

    @property
    def columns(self) -> list[str]:
        cols = [name for name, _ in self.feature_columns]
        for name in self.sensitive_names + [self.label_column]:
            if name not in cols:
                cols.append(name)
        return cols

    def restrict(self, attributes: Sequence[str]) -> "DatasetSchema":
        """Same schema with only the named sensitive attributes (a task)."""
        known = dict(self.sensitive_attributes)
        missing = [a for a in attributes if a not in known]
        if missing:
            raise SchemaError(f"unknown sensitive attribute(s): {missing}")
        return DatasetSchema(
            self.label_column,
            self.favorable_value,
            self.feature_columns,
            tuple((a, known[a]) for a in attributes),
        )


def load_schema(path) -> DatasetSchema:
    with open(path, encoding="utf-8") as fh:
        return DatasetSchema.from_dict(json.load(fh))


def recipe_paths(name: str) -> tuple[Path, Path]:
    """(csv path, schema path) of a bundled recipe."""
    if name not in RECIPES:
        raise SchemaError(f"unknown recipe {name!r}; choose from {RECIPES}")
    base = resources.files("fairaudit") / "recipes"
    data = base / ("adult.csv.gz" if name == "adult" else f"{name}.csv")
    return Path(str(data)), Path(str(base / f"{name}.schema.json"))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Schema columns of a CSV; numeric columns as float, the rest as str."""

    frame: pd.DataFrame
    schema: DatasetSchema
    labels: np.ndarray
    row_ids: np.ndarray
    name: str = ""

    @property
    def N(self) -> int:
        return len(self.labels)

    def __len__(self):
        return self.N

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        labels = self.labels[idx]
        labels.setflags(write=False)
        row_ids = self.row_ids[idx]
        row_ids.setflags(write=False)
        return Dataset(self.frame.iloc[idx].reset_index(drop=True), self.schema, labels, row_ids, self.name)

    def with_schema(self, schema: DatasetSchema) -> "Dataset":
        missing = [c for c in schema.columns if c not in self.frame.columns]
        if missing:
            raise MissingColumn(missing[0])
        return Dataset(self.frame, schema, self.labels, self.row_ids, self.name)


def parse_floats(col: pd.Series) -> np.ndarray:
    """Correctly rounded ``float`` parse of a text column; NaN where unparseable."""

    def conv(text):
        try:
            return float(text)
        except ValueError:
            return np.nan

    return np.fromiter((conv(v) for v in col), dtype=np.float64, count=len(col))


def load_dataset(path, schema: DatasetSchema) -> Dataset:
    """Read a comma-separated UTF-8 file with a header row (``.gz`` allowed)."""
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataset(f"{path}: empty file") from exc
    for col in schema.columns:
        if col not in raw.columns:
            raise MissingColumn(col, str(path))
    if len(raw) == 0:
        raise EmptyDataset(f"{path}: no data rows")

    frame = {}
    kinds = dict(schema.feature_columns)
    for col in schema.columns:
        values = raw[col]
        if kinds.get(col) == NUMERIC:
            parsed = parse_floats(values)
            bad = ~np.isfinite(parsed)
            if bad.any():
                i = int(np.argmax(bad))
                raise UnparseableNumeric(col, i + 2, values.iloc[i])
            frame[col] = parsed
        else:
            frame[col] = values.to_numpy(dtype=object)

    label_values = raw[schema.label_column]
    distinct = sorted(set(label_values))
    if len(distinct) > 2:
        raise NonBinaryLabel(
            f"label column {schema.label_column!r} has {len(distinct)} distinct values: {distinct[:5]}"
        )
    labels = (label_values.to_numpy(dtype=object) == schema.favorable_value).astype(np.int8)
    labels.setflags(write=False)
    row_ids = np.arange(len(raw), dtype=np.int64)
    row_ids.setflags(write=False)
    name = path.name.split(".")[0]
    return Dataset(pd.DataFrame(frame, columns=schema.columns), schema, labels, row_ids, name)


def load_recipe(name: str) -> Dataset:
    data, schema = recipe_paths(name)
    return load_dataset(data, load_schema(schema))


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_indices(n: int, cfg: SplitConfig) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ValueError(f"cannot split a dataset with N={n} < 2")
    n_train = int(math.floor(cfg.train_fraction * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(cfg.seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(d: Dataset, cfg: SplitConfig) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(d.N, cfg)
    return d.subset(train_idx), d.subset(test_idx)


# -- groups ---------------------------------------------------------------

def _attribute_tokens(full: Dataset) -> list[dict]:
    """Per sensitive attribute, map raw value -> group token.

    Non-privileged values collapse into one token: the value itself when only
    one such value is observed, else ``non-<privileged>``.
    """
    maps = []
    for name, privileged in full.schema.sensitive_attributes:
        values = sorted(set(full.frame[name].astype(str)))
        others = [v for v in values if v != privileged]
        other_token = others[0] if len(others) == 1 else f"non-{privileged}"
        maps.append({"privileged": privileged, "other": other_token})
    return maps


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    """Demographic groups of ``full`` plus their training-derived ranking.

    ``groups`` is ordered most- to least-favored.  ``roles`` names each group
    in reports: ``P``/``U`` for one sensitive attribute, ``G1..Gn`` otherwise.
    """

    group_of: np.ndarray
    groups: tuple[str, ...]
    favored_rate: dict
    roles: dict
    attributes: tuple[tuple[str, str], ...]
    tokens: tuple = field(repr=False, default=())
    flags: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.groups)

    @property
    def single_attribute(self) -> bool:
        return len(self.attributes) == 1

    @property
    def role_order(self) -> list[str]:
        return [self.roles[g] for g in self.groups]

    def keys_for(self, d: Dataset) -> np.ndarray:
        return group_keys(d, self.attributes, self.tokens)

    def role_codes(self, keys) -> np.ndarray:
        """Rank index (0 = most favored) of each key."""
        index = {g: i for i, g in enumerate(self.groups)}
        try:
            return np.fromiter((index[k] for k in keys), dtype=np.int64, count=len(keys))
        except KeyError as exc:
            raise ValueError(f"unknown group key {exc}") from None

    def keys_with_roles(self, roles) -> set[str]:
        inverse = {r: g for g, r in self.roles.items()}
        unknown = [r for r in roles if r not in inverse]
        if unknown:
            raise ValueError(f"unknown group role(s) {unknown}; known: {self.role_order}")
        return {inverse[r] for r in roles}

    def to_dict(self) -> dict:
        return {
            "groups": {self.roles[g]: g for g in self.groups},
            "favored_rate": {self.roles[g]: self.favored_rate[g] for g in self.groups},
            "flags": list(self.flags),
        }


def group_keys(d: Dataset, attributes, tokens) -> np.ndarray:
    parts = []
    for (name, privileged), tok in zip(attributes, tokens):
        raw = d.frame[name].astype(str).to_numpy(dtype=object)
        parts.append(np.where(raw == privileged, tok["privileged"], tok["other"]))
    keys = parts[0].astype(object)
    for p in parts[1:]:
        keys = np.array([f"{a}/{b}" for a, b in zip(keys, p)], dtype=object)
    return keys


def assign_groups(train: Dataset, full: Dataset) -> GroupAssignment:
    if train.schema.sensitive_attributes != full.schema.sensitive_attributes:
        raise SchemaError("train and full datasets must share sensitive attributes")
    attributes = full.schema.sensitive_attributes
    tokens = tuple(_attribute_tokens(full))
    full_keys = group_keys(full, attributes, tokens)
    train_keys = group_keys(train, attributes, tokens)

    rates = {}
    for key in sorted(set(full_keys)):
        mask = train_keys == key
        rates[key] = float(train.labels[mask].mean()) if mask.any() else None

    flags = []
    seen = [k for k in rates if rates[k] is not None]
    unseen = sorted(k for k in rates if rates[k] is None)
    for k in unseen:
        flags.append(f"group_absent_in_train:{k}")
    ranked = sorted(seen, key=lambda k: (-rates[k], k)) + unseen

    if len(attributes) == 1:
        priv = tokens[0]["privileged"]
        if priv in ranked and ranked[0] != priv:
            # declared privilege wins; the inversion is reported
            flags.append("privilege_rank_inversion")
            ranked = [priv] + [k for k in ranked if k != priv]
        roles = {k: ("P" if k == priv else "U") for k in ranked}
    else:
        roles = {k: f"G{i + 1}" for i, k in enumerate(ranked)}

    full_keys.setflags(write=False)
    return GroupAssignment(
        group_of=full_keys,
        groups=tuple(ranked),
        favored_rate=rates,
        roles=roles,
        attributes=attributes,
        tokens=tokens,
        flags=tuple(flags),
    )


# -- encoding -------------------------------------------------------------

@dataclass(frozen=True)
class FeatureEncoder:
    """Encoding dictionary fit on training rows.

    Numeric columns are standardized with the training mean and population
    std (zero-variance columns are dropped); categoricals get one indicator
    per training level, unseen levels encode as all zeros.
    """

    numeric: tuple[tuple[str, float, float], ...]
    categorical: tuple[tuple[str, tuple[str, ...]], ...]
    dropped: tuple[str, ...] = ()

    @classmethod
    def fit(cls, train: Dataset) -> "FeatureEncoder":
        numeric, categorical, dropped = [], [], []
        for name, kind in train.schema.feature_columns:
            col = train.frame[name]
            if kind == NUMERIC:
                values = col.to_numpy(dtype=np.float64)
                mean = float(values.mean())
                std = float(values.std())
                if std == 0.0:
                    dropped.append(name)
                else:
                    numeric.append((name, mean, std))
            else:
                categorical.append((name, tuple(sorted(set(col.astype(str))))))
        return cls(tuple(numeric), tuple(categorical), tuple(dropped))

    @property
    def feature_names(self) -> list[str]:
        names = [n for n, _, _ in self.numeric]
        for name, levels in self.categorical:
            names.extend(f"{name}={lvl}" for lvl in levels)
        return names

    @property
    def dim(self) -> int:
        return len(self.numeric) + sum(len(lv) for _, lv in self.categorical)

    def transform(self, d: Dataset, frame: pd.DataFrame | None = None) -> np.ndarray:
        frame = d.frame if frame is None else frame
        out = np.zeros((len(frame), self.dim), dtype=np.float64)
        j = 0
        for name, mean, std in self.numeric:
            out[:, j] = (frame[name].to_numpy(dtype=np.float64) - mean) / std
            j += 1
        rows = np.arange(len(frame))
        for name, levels in self.categorical:
            index = {lvl: i for i, lvl in enumerate(levels)}
            codes = np.fromiter(
                (index.get(v, -1) for v in frame[name].astype(str)), dtype=np.int64, count=len(frame)
            )
            hit = codes >= 0
            out[rows[hit], j + codes[hit]] = 1.0
            j += len(levels)
        return out

    def to_dict(self) -> dict:
        return {
            "numeric": [[n, m, s] for n, m, s in self.numeric],
            "categorical": [[n, list(lv)] for n, lv in self.categorical],
            "dropped": list(self.dropped),
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def encode_features(train: Dataset, *others: Dataset) -> tuple[FeatureEncoder, list[np.ndarray]]:
    """Fit the encoder on ``train``; encode ``train`` and every other dataset."""
    enc = FeatureEncoder.fit(train)
    return enc, [enc.transform(d) for d in (train, *others)]
