import numpy as np
import pandas as pd
import pytest

from fairaudit.data import CATEGORICAL, NUMERIC, Dataset, DatasetSchema, GroupAssignment


def make_dataset(columns: dict, labels, sensitive=(("sex", "M"),), kinds=None, name="toy") -> Dataset:
    """Dataset from in-memory columns; every column is a feature."""
    kinds = kinds or {}
    feats = []
    for col, values in columns.items():
        kind = kinds.get(col) or (NUMERIC if np.issubdtype(np.asarray(values).dtype, np.number) else CATEGORICAL)
        feats.append((col, kind))
    schema = DatasetSchema("y", "1", tuple(feats), tuple(sensitive))
    frame = {}
    for col, kind in feats:
        values = np.asarray(columns[col])
        frame[col] = values.astype(np.float64) if kind == NUMERIC else values.astype(str).astype(object)
    labels = np.asarray(labels, dtype=np.int8)
    frame["y"] = labels.astype(str).astype(object)
    labels.setflags(write=False)
    row_ids = np.arange(len(labels))
    row_ids.setflags(write=False)
    return Dataset(pd.DataFrame(frame, columns=schema.columns), schema, labels, row_ids, name)


def make_groups(keys, order=None, single=None) -> GroupAssignment:
    """GroupAssignment over arbitrary keys, ranked by ``order`` (default sorted).

    Two keys get P/U roles; more get G1..Gn.
    """
    keys = np.asarray(keys, dtype=object)
    order = tuple(order or sorted(set(keys.tolist())))
    single = len(order) == 2 if single is None else single
    if single:
        roles = {order[0]: "P", order[1]: "U"}
        attributes = (("a", order[0]),)
    else:
        roles = {k: f"G{i + 1}" for i, k in enumerate(order)}
        attributes = (("a", "x"), ("b", "y"))
    return GroupAssignment(keys, order, {k: None for k in order}, roles, attributes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
