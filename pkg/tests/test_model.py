import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairaudit.model import Hyper, LogisticModel, apply_threshold, fit_logistic, predict, predict_proba


def model(weights, bias=0.0):
    return LogisticModel(np.asarray(weights, dtype=np.float64), bias)


def test_separable_two_points():
    X = np.array([[-1.0], [1.0]])
    m = fit_logistic(X, [0, 1], hyper=Hyper(epochs=2000))
    assert predict(m, X).tolist() == [0, 1]


def test_mirror_points_give_half_at_origin():
    X = np.array([[-1.0, 2.0], [1.0, -2.0]])
    m = fit_logistic(X, [0, 1])
    assert predict_proba(m, np.zeros((1, 2)))[0] == pytest.approx(0.5, abs=1e-12)


def test_constant_weights_match_unweighted(rng):
    X = rng.normal(size=(50, 3))
    y = (rng.random(50) < 0.4).astype(int)
    a = fit_logistic(X, y)
    b = fit_logistic(X, y, np.full(50, 3.7))
    np.testing.assert_allclose(a.weights, b.weights, rtol=0, atol=1e-12)
    assert a.bias == pytest.approx(b.bias, abs=1e-12)


def test_duplication_equals_integer_weight(rng):
    X = rng.normal(size=(20, 2))
    y = (rng.random(20) < 0.5).astype(int)
    reps = rng.integers(1, 4, size=20)
    dup = fit_logistic(np.repeat(X, reps, axis=0), np.repeat(y, reps))
    wtd = fit_logistic(X, y, reps.astype(float))
    np.testing.assert_allclose(dup.weights, wtd.weights, rtol=0, atol=1e-10)
    assert dup.bias == pytest.approx(wtd.bias, abs=1e-10)


def test_zero_weight_rows_are_ignored(rng):
    X = rng.normal(size=(30, 2))
    y = (rng.random(30) < 0.5).astype(int)
    w = np.ones(30)
    w[::3] = 0.0
    a = fit_logistic(X, y, w)
    b = fit_logistic(X[w > 0], y[w > 0])
    np.testing.assert_allclose(a.weights, b.weights, rtol=0, atol=1e-12)


def test_deterministic_bytes(rng):
    X = rng.normal(size=(40, 4))
    y = (rng.random(40) < 0.5).astype(int)
    a, b = fit_logistic(X, y, seed=7), fit_logistic(X, y, seed=7)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias
    assert a.to_json() == b.to_json()


def test_json_round_trip(rng):
    m = fit_logistic(rng.normal(size=(10, 2)), [0, 1] * 5, seed=3, feature_hash="abc")
    back = LogisticModel.from_json(m.to_json())
    assert back.weights.tobytes() == m.weights.tobytes()
    assert (back.bias, back.seed, back.feature_hash, back.hyper) == (m.bias, 3, "abc", m.hyper)


def test_one_class_warns_and_flags():
    with pytest.warns(RuntimeWarning):
        m = fit_logistic(np.eye(3), [1, 1, 1])
    assert "one_class_labels" in m.flags


def test_bad_inputs():
    with pytest.raises(ValueError):
        fit_logistic(np.ones((3, 2)), [0, 1])
    with pytest.raises(ValueError):
        fit_logistic(np.ones((2, 2)), [0, 1], [-1.0, 2.0])
    with pytest.raises(ValueError):
        fit_logistic(np.ones((2, 2)), [0, 1], [0.0, 0.0])
    with pytest.raises(ValueError):
        predict_proba(model([1.0]), np.ones((2, 2)))


def test_predict_proba_examples():
    assert predict_proba(model([0.0, 0.0]), np.ones((3, 2))).tolist() == [0.5] * 3
    assert predict_proba(model([0.0], 50.0), np.zeros((2, 1))).min() > 0.999
    assert predict_proba(model([1.0]), np.ones((1, 1)))[0] == pytest.approx(0.7310585786300049, abs=1e-12)


def test_probabilities_stay_open_interval():
    p = predict_proba(model([1.0]), np.array([[-1000.0], [1000.0]]))
    assert 0.0 < p[0] and p[1] < 1.0


def test_thresholds():
    assert apply_threshold([0.2, 0.8]).tolist() == [0, 1]
    p = predict_proba(model([3.0]), np.array([[-20.0], [0.0], [20.0]]))
    assert apply_threshold(p, 0.0).tolist() == [1, 1, 1]
    assert apply_threshold(p, 1.0).tolist() == [0, 0, 0]
    with pytest.raises(ValueError):
        apply_threshold(p, 1.5)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0, 3))
@settings(max_examples=100)
def test_monotone_in_positive_weight_feature(x, w, step):
    m = model([w, -0.3], 0.1)
    lo = predict_proba(m, np.array([[x, 1.0]]))[0]
    hi = predict_proba(m, np.array([[x + step, 1.0]]))[0]
    assert hi >= lo


def test_gradient_descent_lowers_loss(rng):
    X = rng.normal(size=(200, 3))
    y = (X @ [1.0, -2.0, 0.5] + rng.normal(size=200) > 0).astype(int)

    def loss(m):
        p = predict_proba(m, X)
        return -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        m = fit_logistic(X, y)
    assert loss(m) < loss(model([0.0, 0.0, 0.0])) - 0.2
