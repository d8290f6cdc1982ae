"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairaudit import _kernels_py, kernels

compiled = pytest.importorskip("fairaudit._kernels")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("density", [1.0, 0.3])
def test_logistic_gd_agrees(rng, density):
    X = rng.normal(size=(300, 8)) * (rng.random((300, 8)) < density)
    y = (rng.random(300) < 0.4).astype(np.float64)
    w = rng.random(300) * (rng.random(300) < 0.9)
    a = compiled.logistic_gd(X, y, w, 0.1, 200, 1e-3)
    b = _kernels_py.logistic_gd(X, y, w, 0.1, 200, 1e-3)
    np.testing.assert_allclose(np.asarray(a[0]), b[0], rtol=0, atol=1e-10)
    assert a[1] == pytest.approx(b[1], abs=1e-10)


@given(st.lists(st.integers(-6, 6), min_size=1, max_size=50), st.lists(st.integers(-6, 6), min_size=1, max_size=50))
@settings(max_examples=200, deadline=None)
def test_dominance_counts_agree(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    assert tuple(compiled.dominance_counts(a, b)) == _kernels_py.dominance_counts(a, b)


@given(st.integers(1, 5), st.data())
@settings(max_examples=200, deadline=None)
def test_confusion_by_group_agrees(n_groups, data):
    n = data.draw(st.integers(1, 60))
    codes = np.asarray(data.draw(st.lists(st.integers(0, n_groups - 1), min_size=n, max_size=n)), dtype=np.int_)
    yt = np.asarray(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.int8)
    yp = np.asarray(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.int8)
    a = np.asarray(compiled.confusion_by_group(codes, yt, yp, n_groups))
    b = _kernels_py.confusion_by_group(codes, yt, yp, n_groups)
    assert np.array_equal(a, b)
    assert a.sum() == n


def test_wrappers_coerce_dtypes():
    counts = kernels.confusion_by_group([0, 1, 1], [1, 0, 1], [1, 1, 0], 2)
    assert counts.tolist() == [[1, 0, 0, 0], [0, 1, 1, 0]]
    assert kernels.dominance_counts([1, 2, 3], [2]) == (1, 1)
    coef, bias = kernels.logistic_gd([[1.0], [-1.0]], [1, 0], [1, 1], 0.1, 10, 0.0)
    assert coef[0] > 0 and bias == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("impl", [compiled, _kernels_py], ids=["cython", "python"])
def test_confusion_rejects_bad_codes(impl):
    y = np.zeros(2, dtype=np.int8)
    with pytest.raises(ValueError):
        impl.confusion_by_group(np.array([0, 2], dtype=np.int_), y, y, 2)


def test_fallback_backend_end_to_end(tmp_path):
    """A forced-fallback run matches the compiled run to rounding."""
    import json
    import os
    import subprocess
    import sys

    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dataset": "recipe:german", "task": ["age"], "runs": 2, "methods": ["rew", "eop"]}))
    outs = {}
    for backend in ("python", "cython"):
        env = dict(os.environ, FAIRAUDIT_KERNELS=backend)
        code = f"import fairaudit; print(fairaudit.BACKEND)"
        assert subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True).stdout.strip() == backend
        subprocess.run([sys.executable, "-m", "fairaudit.cli", "run", "--config", str(cfg), "--out", str(tmp_path / backend)],
                       env=env, check=True, capture_output=True)
        outs[backend] = json.loads((tmp_path / backend / "results.json").read_text())
    for run_py, run_cy in zip(outs["python"]["runs"], outs["cython"]["runs"]):
        assert run_py["split"] == run_cy["split"]
        for m in ("base", "rew", "eop"):
            for k, v in run_cy["reports"][m].items():
                if isinstance(v, float):
                    assert run_py["reports"][m][k] == pytest.approx(v, abs=1e-9)
