"""
Classical learning stages: min-max scaling, PCA, multinomial logistic
regression, k-nearest neighbours, a linear SVM and stratified splits.

Every stage is a pair of functions, `*_fit` returning an immutable model
and a transform or predict function taking that model.
"""
import logging
from collections import Counter, namedtuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .exceptions import LearningError

logger = logging.getLogger(__name__)

# Cumulative explained variance is compared with this much slack
VARIANCE_SLACK = 1e-12


ScalerModel = namedtuple("ScalerModel", ("minimum", "maximum"))

PCAModel = namedtuple(
    "PCAModel",
    ("mean", "components", "explained_variance", "explained_variance_ratio",
     "n_components", "degenerate")
)

LogRegModel = namedtuple(
    "LogRegModel",
    ("classes", "weights", "bias", "C", "max_iter", "tol", "n_iter", "grad_norm")
)

SVMModel = namedtuple("SVMModel", ("classes", "weights", "bias", "C", "epochs", "seed"))


def as_features(X, what="features"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise LearningError("%s must be a 2D array, got %d dimensions" % (what, X.ndim))
    if not np.all(np.isfinite(X)):
        raise LearningError("%s contain non-finite values" % what)
    return X


def as_labels(y, n_samples):
    y = np.asarray(y)
    if y.shape != (n_samples, ):
        raise LearningError("Expected %d labels, got shape %s" % (n_samples, y.shape))
    return y


def encode_labels(y):
    """Sorted distinct classes and the class index of every label."""
    classes, indices = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise LearningError(
            "Need at least 2 classes to train a classifier, got %d" % len(classes)
        )
    return classes, indices


def minmax_fit(X_train):
    X_train = as_features(X_train, "training features")
    if not len(X_train):
        raise LearningError("Cannot fit a scaler on zero samples")
    return ScalerModel(X_train.min(axis=0), X_train.max(axis=0))


def minmax_transform(model, X):
    """(x - min) / (max - min); zero-range features map to 0, nothing is clipped."""
    X = as_features(X)
    span = model.maximum - model.minimum
    constant = span == 0
    scaled = (X - model.minimum) / np.where(constant, 1.0, span)
    scaled[:, constant] = 0.0
    return scaled


def pca_fit(X_train, variance_fraction=0.99):
    """
    Principal axes from the SVD of the centred training data, in
    descending variance order. Each axis is signed so that its largest
    absolute loading is positive.
    """
    if not 0 < variance_fraction <= 1:
        raise LearningError(
            "PCA variance fraction must be in (0, 1], got %r" % (variance_fraction, )
        )
    X_train = as_features(X_train, "training features")
    n_samples = len(X_train)
    if n_samples < 2:
        raise LearningError("PCA needs at least 2 training samples, got %d" % n_samples)

    mean = X_train.mean(axis=0)
    _, singular, components = np.linalg.svd(X_train - mean, full_matrices=False)
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), pivots])
    components = components * np.where(signs == 0, 1.0, signs)[:, None]

    variance = singular ** 2 / (n_samples - 1)
    total = variance.sum()
    if total <= 0:
        logger.warning("Degenerate PCA: all %d training samples are identical", n_samples)
        return PCAModel(mean, components, variance, np.zeros_like(variance), 1, True)

    ratio = variance / total
    cumulative = np.cumsum(ratio)
    k = int(np.searchsorted(cumulative, variance_fraction - VARIANCE_SLACK)) + 1
    return PCAModel(mean, components, variance, ratio, min(k, len(ratio)), False)


def pca_transform(model, X):
    X = as_features(X)
    return (X - model.mean) @ model.components[:model.n_components].T


def pca_inverse_transform(model, Z):
    Z = as_features(Z, "projected features")
    return Z @ model.components[:model.n_components] + model.mean


def _logreg_objective(params, X, targets, C):
    """Summed cross-entropy plus ||W||^2 / 2C, and its gradient."""
    n_classes = targets.shape[1]
    n_features = X.shape[1]
    weights = params[:n_classes * n_features].reshape(n_classes, n_features)
    bias = params[n_classes * n_features:]

    scores = X @ weights.T + bias
    log_norm = logsumexp(scores, axis=1)
    loss = np.sum(log_norm) - np.sum(scores * targets) + 0.5 / C * np.sum(weights ** 2)

    residual = np.exp(scores - log_norm[:, None]) - targets
    grad_weights = residual.T @ X + weights / C
    grad_bias = residual.sum(axis=0)
    return loss, np.concatenate([grad_weights.ravel(), grad_bias])


def logreg_fit(X, y, C=10.0, max_iter=1000, tol=1e-6):
    """
    Multinomial logistic regression with an L2 penalty on the weights
    (never the bias), minimized by L-BFGS from all-zero parameters.
    Stops once the largest gradient component is at most `tol`.
    """
    if C <= 0:
        raise LearningError("C must be positive, got %r" % (C, ))
    X = as_features(X)
    y = as_labels(y, len(X))
    classes, indices = encode_labels(y)
    n_classes = len(classes)
    n_features = X.shape[1]

    targets = np.zeros((len(X), n_classes))
    targets[np.arange(len(X)), indices] = 1.0
    x0 = np.zeros(n_classes * (n_features + 1))
    result = minimize(
        _logreg_objective, x0, args=(X, targets, C), jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol, "ftol": np.finfo(float).eps},
    )
    params = result.x
    _, gradient = _logreg_objective(params, X, targets, C)
    grad_norm = float(np.max(np.abs(gradient)))
    if grad_norm > tol:
        logger.info(
            "Logistic regression stopped after %d iterations with gradient norm %.3g: %s",
            result.nit, grad_norm, result.message
        )
    weights = params[:n_classes * n_features].reshape(n_classes, n_features)
    bias = params[n_classes * n_features:]
    return LogRegModel(classes, weights, bias, C, max_iter, tol, int(result.nit), grad_norm)


def logreg_decision(model, X):
    return as_features(X) @ model.weights.T + model.bias


def logreg_predict(model, X):
    # argmax returns the first maximum, i.e. the first class in sorted order
    return model.classes[np.argmax(logreg_decision(model, X), axis=1)]


def knn_predict(X_train, y_train, X_test, k=1):
    """
    Euclidean k-nearest neighbours. Equal distances keep training order,
    and a tied vote goes to the label met first among the neighbours.
    """
    X_train = as_features(X_train, "training features")
    y_train = as_labels(y_train, len(X_train))
    X_test = as_features(X_test, "test features")
    if not len(X_train):
        raise LearningError("k-nearest neighbours needs a non-empty training set")
    if not 1 <= k <= len(X_train):
        raise LearningError("k must be in 1..%d, got %r" % (len(X_train), k))
    if X_test.shape[1] != X_train.shape[1]:
        raise LearningError(
            "Test features have %d columns, training features %d" % (
                X_test.shape[1], X_train.shape[1])
        )

    distances = ((X_test[:, None, :] - X_train[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(distances, axis=1, kind="stable")[:, :k]
    predictions = []
    for neighbours in order:
        labels = [y_train[i] for i in neighbours]
        votes = Counter(labels)
        best = max(votes.values())
        predictions.append(next(label for label in labels if votes[label] == best))
    return np.array(predictions, dtype=y_train.dtype)


def svm_fit(X, y, C=1.0, epochs=50, seed=0):
    """
    One-vs-rest linear SVMs trained together by Pegasos stochastic
    subgradient descent, lambda = 1 / (C n) and step 1 / (lambda t).
    The bias is learned as the weight of a constant extra feature.
    """
    if C <= 0:
        raise LearningError("C must be positive, got %r" % (C, ))
    if epochs < 1:
        raise LearningError("epochs must be at least 1, got %r" % (epochs, ))
    X = as_features(X)
    y = as_labels(y, len(X))
    classes, indices = encode_labels(y)
    n_samples = len(X)

    augmented = np.hstack([X, np.ones((n_samples, 1))])
    signs = -np.ones((n_samples, len(classes)))
    signs[np.arange(n_samples), indices] = 1.0
    lam = 1.0 / (C * n_samples)
    weights = np.zeros((len(classes), augmented.shape[1]))

    rng = np.random.default_rng(seed)
    step = 0
    for _ in range(epochs):
        for i in rng.permutation(n_samples):
            step += 1
            eta = 1.0 / (lam * step)
            x = augmented[i]
            violated = signs[i] * (weights @ x) < 1
            weights *= 1.0 - eta * lam
            weights[violated] += eta * signs[i, violated][:, None] * x
    return SVMModel(classes, weights[:, :-1], weights[:, -1], C, epochs, seed)


def svm_decision(model, X):
    return as_features(X) @ model.weights.T + model.bias


def svm_predict(model, X):
    return model.classes[np.argmax(svm_decision(model, X), axis=1)]


def stratified_split(labels, test_fraction=0.2, seed=0):
    """
    Per class (in sorted order) floor(n * f + 0.5) samples, kept within
    1..n-1, go to the test side after a seeded shuffle.
    Returns sorted (train, test) index arrays.
    """
    if not 0 < test_fraction < 1:
        raise LearningError("Test fraction must be in (0, 1), got %r" % (test_fraction, ))
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        n = len(members)
        if n < 2:
            raise LearningError(
                "Class '%s' has %d sample, a stratified split needs at least 2" % (label, n)
            )
        n_test = min(max(int(np.floor(n * test_fraction + 0.5)), 1), n - 1)
        shuffled = rng.permutation(members)
        test.extend(shuffled[:n_test])
        train.extend(shuffled[n_test:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))


def accuracy(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if not len(y_true):
        raise LearningError("Accuracy of an empty prediction is undefined")
    return float(np.mean(y_true == y_pred))
