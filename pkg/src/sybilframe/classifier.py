"""Class-weighted L2-regularised logistic regression used for node priors.

Any estimator exposing ``fit``, ``predict_proba`` and ``classes_`` can stand
in for it; this one is the default because it gives probabilities directly.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log1p
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .graph import Label


class WeightedLogisticRegression(ClassifierMixin, BaseEstimator):
    """Binary logistic regression with per-class loss weights.

    Minimises ``sum_i w_{y_i} log(1 + exp(-y_i f(x_i))) + |coef|^2 / (2 C)``
    on standardised features; the intercept is not penalised.

    Parameters
    ----------
    C : float
        Inverse regularisation strength.
    class_weight : dict or None
        Loss weight per class label; missing classes weigh 1.
    standardize : bool
        Centre and scale features with training statistics before fitting.
    tol : float
        Gradient-norm tolerance for L-BFGS.
    """

    def __init__(self, C=1.0, class_weight=None, standardize=True, tol=1e-8, max_iter=2000):
        self.C = C
        self.class_weight = class_weight
        self.standardize = standardize
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2, ensure_all_finite=True)
        classes, counts = np.unique(y, return_counts=True)
        if len(classes) != 2:
            raise ValueError(f"need exactly two classes, got {len(classes)}")
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            self.mean_ = X.mean(axis=0)
            scale = X.std(axis=0)
            self.scale_ = np.where(scale > 0, scale, 1.0)
        else:
            self.mean_ = np.zeros(X.shape[1])
            self.scale_ = np.ones(X.shape[1])
        Z = (X - self.mean_) / self.scale_
        t = np.where(y == classes[1], 1.0, -1.0)
        cw = self.class_weight or {}
        w = np.array([cw.get(c, 1.0) for c in classes])[(y == classes[1]).astype(int)]
        lam = 1.0 / self.C

        def objective(theta):
            coef, b = theta[:-1], theta[-1]
            margin = t * (Z @ coef + b)
            # log(1 + exp(-margin)) without overflow
            loss = np.where(margin > 0, log1p(np.exp(-margin)), -margin + log1p(np.exp(margin)))
            f = np.dot(w, loss) + 0.5 * lam * np.dot(coef, coef)
            g_m = -w * t * expit(-margin)
            grad = np.append(Z.T @ g_m + lam * coef, g_m.sum())
            return f, grad

        res = minimize(
            objective,
            np.zeros(Z.shape[1] + 1),
            jac=True,
            method="L-BFGS-B",
            options={"gtol": self.tol, "maxiter": self.max_iter},
        )
        self.coef_ = res.x[:-1] / self.scale_
        self.intercept_ = res.x[-1] - np.dot(res.x[:-1], self.mean_ / self.scale_)
        self.n_iter_ = res.nit
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        check_is_fitted(self)
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


def train_classifier(features, labels, class_weights=(1.0, 1.0), C=1.0):
    """Fit the default prior classifier on benign/Sybil labelled rows.

    ``class_weights`` is ``(benign_weight, sybil_weight)``; raising the
    benign weight penalises rejected benign users more and lowers FPR.
    """
    labels = np.asarray(labels)
    present = set(np.unique(labels).tolist())
    if present != {int(Label.BENIGN), int(Label.SYBIL)}:
        raise ValueError("training labels must contain both benign and Sybil examples only")
    for lab in (Label.BENIGN, Label.SYBIL):
        if np.sum(labels == lab) < 2:
            raise ValueError("need at least two examples per class")
    weights = {int(Label.BENIGN): class_weights[0], int(Label.SYBIL): class_weights[1]}
    return WeightedLogisticRegression(C=C, class_weight=weights).fit(features, labels)
