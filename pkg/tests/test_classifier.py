import numpy as np
import pytest
from scipy.special import expit
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sybilframe.classifier import WeightedLogisticRegression, train_classifier


def blobs(rng, n=300, shift=1.5):
    X = np.vstack([rng.normal(shift, 1.0, (n, 2)), rng.normal(-shift, 1.0, (n, 2))])
    y = np.array([1] * n + [-1] * n)
    return X, y


def test_separable_training_accuracy():
    X = np.array([[0, 0], [0, 1], [1, 0], [3, 3], [3, 4], [4, 3]], dtype=float)
    y = np.array([-1, -1, -1, 1, 1, 1])
    clf = train_classifier(X, y, C=100.0)
    assert clf.score(X, y) == 1.0


def test_symmetric_data_midpoint():
    rng = np.random.default_rng(0)
    a = rng.normal(0, 1, (500, 2))
    X = np.vstack([a + [2, 1], -a + [-2, -1]])
    y = np.array([1] * 500 + [-1] * 500)
    clf = train_classifier(X, y, class_weights=(1.0, 1.0))
    mid = X[:500].mean(axis=0) / 2 + X[500:].mean(axis=0) / 2
    assert clf.predict_proba(mid[None])[0, 1] == pytest.approx(0.5, abs=1e-3)


def test_benign_weight_reduces_false_positives():
    rng = np.random.default_rng(1)
    X, y = blobs(rng, shift=0.7)
    Xv, yv = blobs(np.random.default_rng(2), n=2000, shift=0.7)
    fps = []
    for w in (1.0, 2.0, 4.0):
        clf = train_classifier(X, y, class_weights=(w, 1.0))
        fps.append(int(np.sum((clf.predict(Xv) == -1) & (yv == 1))))
    assert fps[0] > fps[1] > fps[2]


def test_calibration_on_logistic_ground_truth():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(10000, 3))
    w_true, b_true = np.array([1.5, -2.0, 0.5]), 0.3
    p = expit(X @ w_true + b_true)
    y = np.where(rng.random(10000) < p, 1, -1)
    clf = WeightedLogisticRegression().fit(X, y)
    p_hat = clf.predict_proba(X)[:, 1]
    # mean absolute calibration error over decile bins
    bins = np.quantile(p_hat, np.linspace(0, 1, 11))
    idx = np.clip(np.searchsorted(bins, p_hat, side="right") - 1, 0, 9)
    err = [abs(p_hat[idx == b].mean() - np.mean(y[idx == b] == 1)) for b in range(10)]
    assert np.mean(err) < 0.05


def test_probability_monotone_in_score():
    rng = np.random.default_rng(4)
    X, y = blobs(rng)
    clf = WeightedLogisticRegression().fit(X, y)
    Z = rng.normal(size=(200, 2)) * 3
    order = np.argsort(clf.decision_function(Z))
    assert np.all(np.diff(clf.predict_proba(Z)[order, 1]) >= 0)


def test_standardisation_does_not_change_decisions_much():
    rng = np.random.default_rng(5)
    X, y = blobs(rng)
    a = WeightedLogisticRegression(C=1e6).fit(X, y)
    b = WeightedLogisticRegression(C=1e6, standardize=False).fit(X, y)
    assert np.mean(a.predict(X) == b.predict(X)) > 0.99


class TestEstimatorContract:
    def test_get_params_and_clone(self):
        clf = WeightedLogisticRegression(C=3.0, class_weight={1: 2.0})
        assert clf.get_params()["C"] == 3.0
        assert clone(clf).get_params() == clf.get_params()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            WeightedLogisticRegression().predict(np.zeros((1, 2)))

    def test_rejects_single_class(self):
        with pytest.raises(ValueError):
            WeightedLogisticRegression().fit(np.zeros((4, 2)), [1, 1, 1, 1])

    def test_rejects_nonfinite(self):
        X = np.array([[0.0, np.nan], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(ValueError):
            WeightedLogisticRegression().fit(X, [1, 1, -1, -1])

    def test_train_requires_two_per_class(self):
        with pytest.raises(ValueError):
            train_classifier(np.zeros((3, 2)), [1, 1, -1])

    def test_train_rejects_unknown_labels(self):
        with pytest.raises(ValueError):
            train_classifier(np.zeros((6, 2)), [1, 1, -1, -1, 0, 0])
