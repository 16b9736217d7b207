"""
Repeated stratified evaluation of a feature matrix, plus the reports
and plot-ready tables derived from it.

Run i always uses seed `seed_base + i`: the split, the scaler, the PCA
and the classifier of that run depend on nothing else, so runs can be
spread over worker processes without changing a single byte of output.
"""
import csv
import json
import logging
from collections import OrderedDict, namedtuple
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from .choices import KNN, LOGREG, MODELS, SVM
from .exceptions import (
    ConfigurationError, EvaluationError, LearningError
)
from .features import build_feature_matrix, format_real
from .learn import (
    accuracy, knn_predict, logreg_fit, logreg_predict, minmax_fit, minmax_transform,
    pca_fit, pca_transform, stratified_split, svm_fit, svm_predict
)
from .parser import parse_grid
from .settings import digihom_settings

logger = logging.getLogger(__name__)

PROTOCOL_FIELDS = (
    "model", "runs", "test_fraction", "pca_fraction", "seed_base",
    "C", "max_iter", "tol", "k", "svm_C", "svm_epochs",
)

# Hyperparameters recorded in a report's config, per model
MODEL_PARAMETERS = {
    LOGREG: ("C", "max_iter", "tol"),
    KNN: ("k", ),
    SVM: ("svm_C", "svm_epochs"),
}

Protocol = namedtuple("Protocol", PROTOCOL_FIELDS)

EvalReport = namedtuple(
    "EvalReport",
    ("model", "runs", "seeds", "accuracies", "mean", "std", "config", "degenerate_runs")
)

RunData = namedtuple("RunData", ("train", "test", "scaler", "pca", "X_train", "X_test"))


def default_protocol(**overrides):
    """A Protocol filled from the DIGIHOM settings, then `overrides`."""
    values = {
        "model": LOGREG,
        "runs": digihom_settings.RUNS,
        "test_fraction": digihom_settings.TEST_FRACTION,
        "pca_fraction": digihom_settings.PCA_VARIANCE,
        "seed_base": digihom_settings.SEED,
        "C": digihom_settings.LOGREG_C,
        "max_iter": digihom_settings.LOGREG_MAX_ITER,
        "tol": digihom_settings.LOGREG_TOL,
        "k": digihom_settings.KNN_K,
        "svm_C": digihom_settings.SVM_C,
        "svm_epochs": digihom_settings.SVM_EPOCHS,
    }
    unknown = set(overrides) - set(values)
    if unknown:
        raise ConfigurationError("Unknown protocol fields: %s" % ", ".join(sorted(unknown)))
    values.update((key, value) for key, value in overrides.items() if value is not None)
    return validate_protocol(Protocol(**values))


def validate_protocol(protocol):
    if protocol.model not in MODELS:
        raise ConfigurationError(
            "Unknown model '%s', expected one of %s" % (protocol.model, ", ".join(MODELS))
        )
    if protocol.runs < 1:
        raise ConfigurationError("runs must be at least 1, got %r" % (protocol.runs, ))
    if not 0 < protocol.test_fraction < 1:
        raise ConfigurationError(
            "test fraction must be in (0, 1), got %r" % (protocol.test_fraction, )
        )
    if not 0 < protocol.pca_fraction <= 1:
        raise ConfigurationError(
            "PCA variance fraction must be in (0, 1], got %r" % (protocol.pca_fraction, )
        )
    if protocol.C <= 0 or protocol.svm_C <= 0:
        raise ConfigurationError("C must be positive")
    if protocol.k < 1:
        raise ConfigurationError("k must be at least 1, got %r" % (protocol.k, ))
    return protocol


def protocol_config(protocol):
    """Snapshot of everything that influences the accuracies of a report."""
    config = OrderedDict()
    for field in ("test_fraction", "pca_fraction", "seed_base"):
        config[field] = getattr(protocol, field)
    for field in MODEL_PARAMETERS[protocol.model]:
        config[field] = getattr(protocol, field)
    config["std"] = "population"
    return config


def prepare_run(X, labels, protocol, seed):
    """Split, then fit the scaler and PCA on the training rows only."""
    train, test = stratified_split(labels, protocol.test_fraction, seed)
    scaler = minmax_fit(X[train])
    pca = pca_fit(minmax_transform(scaler, X[train]), protocol.pca_fraction)
    return RunData(
        train, test, scaler, pca,
        pca_transform(pca, minmax_transform(scaler, X[train])),
        pca_transform(pca, minmax_transform(scaler, X[test])),
    )


def classify(protocol, X_train, y_train, X_test, seed):
    if protocol.model == LOGREG:
        model = logreg_fit(X_train, y_train, protocol.C, protocol.max_iter, protocol.tol)
        return logreg_predict(model, X_test)
    if protocol.model == KNN:
        return knn_predict(X_train, y_train, X_test, protocol.k)
    model = svm_fit(X_train, y_train, protocol.svm_C, protocol.svm_epochs, seed)
    return svm_predict(model, X_test)


def run_once(X, labels, protocol, seed):
    """Accuracy of one run and whether its PCA was degenerate."""
    data = prepare_run(X, labels, protocol, seed)
    predicted = classify(protocol, data.X_train, labels[data.train], data.X_test, seed)
    return accuracy(labels[data.test], predicted), data.pca.degenerate


def _run_seed(seed, X, labels, protocol):
    # Exceptions are returned as text: a custom exception loses its
    # seed when pickled back from a worker process.
    try:
        return run_once(X, labels, protocol, seed) + (None, )
    except Exception as e:
        return None, False, "%s: %s" % (e.__class__.__name__, e)


def summarize(accuracies):
    """Mean and population standard deviation."""
    values = np.asarray(accuracies, dtype=np.float64)
    return float(values.mean()), float(values.std())


def make_report(model, seeds, accuracies, config, degenerate_runs=0):
    mean, std = summarize(accuracies)
    return EvalReport(
        model=model,
        runs=len(accuracies),
        seeds=list(seeds),
        accuracies=[float(value) for value in accuracies],
        mean=mean,
        std=std,
        config=config,
        degenerate_runs=degenerate_runs,
    )


def evaluate(matrix, protocol=None, jobs=None):
    """Run the protocol `protocol.runs` times and aggregate the accuracies."""
    protocol = validate_protocol(protocol or default_protocol())
    jobs = digihom_settings.JOBS if jobs is None else jobs
    if not len(matrix):
        raise LearningError("Cannot evaluate an empty feature matrix")
    X = matrix.to_array()
    labels = np.asarray(matrix.labels)
    if len(np.unique(labels)) < 2:
        raise LearningError("Evaluation needs at least 2 classes, got 1")

    seeds = [protocol.seed_base + i for i in range(protocol.runs)]
    worker = partial(_run_seed, X=X, labels=labels, protocol=protocol)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, seeds))
    else:
        results = [worker(seed) for seed in seeds]

    accuracies = []
    degenerate_runs = 0
    for seed, (value, degenerate, problem) in zip(seeds, results):
        if problem is not None:
            raise EvaluationError("Run with seed %d failed: %s" % (seed, problem), seed=seed)
        accuracies.append(value)
        degenerate_runs += int(degenerate)
    if degenerate_runs:
        logger.warning("%d of %d runs had a degenerate PCA", degenerate_runs, protocol.runs)
    return make_report(protocol.model, seeds, accuracies, protocol_config(protocol), degenerate_runs)


def compare_models(matrix, protocol=None, models=MODELS, jobs=None):
    """Evaluate several models on identical (paired) splits."""
    protocol = protocol or default_protocol()
    return OrderedDict(
        (model, evaluate(matrix, protocol._replace(model=model), jobs=jobs))
        for model in models
    )


def grid_ablation(directory, grids, label_pattern=None, binarize_cfg=None,
                  protocol=None, jobs=None):
    """(grid, report) for every grid, each from a fresh feature extraction."""
    label_pattern = label_pattern or digihom_settings.LABEL_PATTERN
    binarize_cfg = binarize_cfg or digihom_settings.BINARIZE
    jobs = digihom_settings.JOBS if jobs is None else jobs
    results = []
    for grid in grids:
        grid = parse_grid(grid)
        matrix, _ = build_feature_matrix(
            directory, grid, label_pattern, binarize_cfg, jobs=jobs
        )
        results.append((grid, evaluate(matrix, protocol, jobs=jobs)))
    return results


def subject_feature_map(matrix, label):
    """
    Mean (beta0, beta1, ratio) per grid cell over the samples of one
    subject, as (row, col, beta0, beta1, ratio) rows in cell order.
    """
    label = str(label)
    rows = [sample.values for sample, own in zip(matrix.samples, matrix.labels) if own == label]
    if not rows:
        raise ConfigurationError("No samples labeled '%s'" % label)
    means = np.mean(np.array(rows, dtype=np.float64), axis=0).reshape(-1, 3)
    grid = matrix.grid
    return [
        (index // grid.cols, index % grid.cols, beta0, beta1, ratio)
        for index, (beta0, beta1, ratio) in enumerate(means)
    ]


def pca_projection(matrix, n_subjects=10):
    """
    Scaled features of the first `n_subjects` labels (sorted) projected
    onto their first two principal axes, as (source, label, pc1, pc2) rows.
    """
    chosen = set(sorted(set(matrix.labels))[:n_subjects])
    keep = [i for i, label in enumerate(matrix.labels) if label in chosen]
    X = matrix.to_array()[keep]
    scaled = minmax_transform(minmax_fit(X), X)
    pca = pca_fit(scaled, 1.0)
    projected = (scaled - pca.mean) @ pca.components[:2].T
    if projected.shape[1] < 2:
        projected = np.hstack([projected, np.zeros((len(projected), 1))])
    return [
        (matrix.sources[i], matrix.labels[i], pc1, pc2)
        for i, (pc1, pc2) in zip(keep, projected)
    ]


def report_to_dict(report):
    data = OrderedDict()
    data["model"] = report.model
    data["runs"] = report.runs
    data["seeds"] = report.seeds
    data["accuracies"] = report.accuracies
    data["mean"] = report.mean
    data["std"] = report.std
    data["config"] = report.config
    data["degenerate_pca_runs"] = report.degenerate_runs
    return data


def report_to_json(report):
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def write_report_json(report, path):
    with open(path, "w") as f:
        f.write(report_to_json(report))


def write_rows_csv(path, header, rows):
    """Plot-data table; floats get 17 significant digits."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                format_real(value) if isinstance(value, (float, np.floating)) else value
                for value in row
            ])


def write_accuracy_csv(report, path):
    write_rows_csv(path, ("run", "accuracy"), enumerate(report.accuracies))


def write_ablation_csv(results, path):
    write_rows_csv(
        path, ("grid", "mean", "std"),
        (("%dx%d" % (grid.rows, grid.cols), report.mean, report.std) for grid, report in results)
    )


def write_feature_map_csv(rows, path):
    write_rows_csv(path, ("row", "col", "beta0", "beta1", "ratio"), rows)


def write_projection_csv(rows, path):
    write_rows_csv(path, ("source", "label", "pc1", "pc2"), rows)


def format_summary(report):
    return "%s: %.4f ± %.4f over %d runs" % (report.model, report.mean, report.std, report.runs)
