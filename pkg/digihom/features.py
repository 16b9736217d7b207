"""
Grid topological feature vectors and the labeled feature matrix.

Each grid cell contributes (beta0, beta1, beta1/beta0); cells are taken in
row-major order, so a GxH grid yields 3*G*H values.
"""
import csv
import logging
import os
import re
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from .exceptions import (
    ConfigurationError, DigihomException, FeatureExtractionError, FeatureFileError
)
from .homology import betti_numbers
from .img import binarize, load_image, partition_grid
from .parser import GridSpec, parse_binarize, parse_grid

logger = logging.getLogger(__name__)

FEATURES_PER_CELL = 3
LEADING_COLUMNS = ["source", "label"]
TRAILING_COLUMNS = ["grid_rows", "grid_cols"]


FeatureVector = namedtuple("FeatureVector", ("values", "grid", "euler"))
FeatureVector.__new__.__defaults__ = ((), )


def format_real(value):
    return format(float(value), ".17g")


def cell_features(profile):
    beta0 = float(profile.beta0)
    beta1 = float(profile.beta1)
    ratio = beta1 / beta0 if beta0 > 0 else 0.0
    return (beta0, beta1, ratio)


def image_feature_vector(image, spec, with_euler=False):
    spec = parse_grid(spec)
    values = []
    euler = []
    for cell in partition_grid(image, spec):
        profile = betti_numbers(cell)
        values.extend(cell_features(profile))
        if with_euler:
            euler.append(float(profile.chi))
    return FeatureVector(tuple(values), spec, tuple(euler))


class FeatureMatrix(object):
    """
    N feature vectors sharing one grid, with subject labels
    and the file each row came from.
    """

    def __init__(self, samples, labels, sources):
        samples = list(samples)
        labels = [str(label) for label in labels]
        sources = [str(source) for source in sources]
        if not (len(samples) == len(labels) == len(sources)):
            raise FeatureFileError(
                "Feature matrix needs as many labels and sources as samples"
            )
        if any(not label for label in labels):
            raise FeatureFileError("Feature matrix labels must be non-empty")
        if samples:
            grid = samples[0].grid
            width = len(samples[0].values)
            euler_width = len(samples[0].euler)
            for sample in samples:
                if sample.grid != grid or len(sample.values) != width or \
                        len(sample.euler) != euler_width:
                    raise FeatureFileError("All feature vectors must share one grid and layout")
            if width != FEATURES_PER_CELL * grid.rows * grid.cols:
                raise FeatureFileError(
                    "A %dx%d grid needs %d features, got %d" % (
                        grid.rows, grid.cols, FEATURES_PER_CELL * grid.rows * grid.cols, width)
                )
        self.samples = samples
        self.labels = labels
        self.sources = sources

    @property
    def grid(self):
        return self.samples[0].grid if self.samples else None

    @property
    def with_euler(self):
        return bool(self.samples and self.samples[0].euler)

    def __len__(self):
        return len(self.samples)

    def to_array(self):
        """N x D float array, Euler columns (if any) after the feature columns."""
        return np.array(
            [list(sample.values) + list(sample.euler) for sample in self.samples],
            dtype=np.float64,
        )

    @property
    def label_array(self):
        return np.array(self.labels, dtype=object)

    def rows(self):
        """(source, label, vector) triples."""
        return list(zip(self.sources, self.labels, self.samples))

    def __eq__(self, other):
        return (
            isinstance(other, FeatureMatrix) and
            self.rows() == other.rows()
        )

    def __repr__(self):
        grid = self.grid
        return "FeatureMatrix(N=%d, grid=%s)" % (
            len(self), "%dx%d" % (grid.rows, grid.cols) if grid else "-"
        )


def compile_label_pattern(pattern):
    try:
        regex = re.compile(pattern)
    except re.error as e:
        raise ConfigurationError("Invalid label pattern '%s': %s" % (pattern, e)) from None
    if regex.groups != 1:
        msg = "Label pattern '%s' must have exactly one capture group, it has %d" % (
            pattern, regex.groups
        )
        raise ConfigurationError(msg)
    return regex


def _extract_one(path, spec, binarize_spec, with_euler):
    """Worker: (vector, None) on success, (None, message) on a per-file failure."""
    try:
        image = binarize(load_image(path), binarize_spec)
        return image_feature_vector(image, spec, with_euler=with_euler), None
    except DigihomException as e:
        return None, "%s: %s" % (os.path.basename(path), e)


def build_feature_matrix(directory, spec, label_pattern, binarize_cfg="otsu",
                         with_euler=False, jobs=1):
    """
    One row per file whose name matches `label_pattern`, sorted by file
    name; the capture group is the label. Returns (matrix, warnings).
    """
    spec = parse_grid(spec)
    binarize_spec = parse_binarize(binarize_cfg)
    regex = compile_label_pattern(label_pattern)

    try:
        names = sorted(
            name for name in os.listdir(directory)
            if os.path.isfile(os.path.join(directory, name))
        )
    except OSError as e:
        raise FeatureExtractionError("Could not list '%s': %s" % (directory, e)) from e
    if not names:
        raise FeatureExtractionError("Directory '%s' holds no files" % directory)

    warnings = []
    matched = []
    for name in names:
        match = regex.search(name)
        if match is None:
            warnings.append("%s: does not match label pattern '%s'" % (name, label_pattern))
            continue
        if not match.group(1):
            warnings.append("%s: label pattern captured an empty label" % name)
            continue
        matched.append((name, match.group(1)))
    if not matched:
        raise FeatureExtractionError(
            "No file in '%s' matches label pattern '%s'" % (directory, label_pattern)
        )

    paths = [os.path.join(directory, name) for name, _ in matched]
    worker = partial(_extract_one, spec=spec, binarize_spec=binarize_spec, with_euler=with_euler)
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, paths))
    else:
        results = [worker(path) for path in paths]

    samples, labels, sources = [], [], []
    for (name, label), (vector, problem) in zip(matched, results):
        if problem is not None:
            warnings.append(problem)
            continue
        samples.append(vector)
        labels.append(label)
        sources.append(name)

    for warning in warnings:
        logger.warning("Skipped %s", warning)
    if not samples:
        raise FeatureExtractionError(
            "Every matching file in '%s' failed: %s" % (directory, "; ".join(warnings))
        )
    return FeatureMatrix(samples, labels, sources), warnings


def feature_header(grid, with_euler=False):
    cells = grid.rows * grid.cols
    columns = LEADING_COLUMNS + ["f%d" % i for i in range(FEATURES_PER_CELL * cells)]
    if with_euler:
        columns += ["chi%d" % i for i in range(cells)]
    return columns + TRAILING_COLUMNS


def write_feature_csv(matrix, path):
    if not len(matrix):
        raise FeatureFileError("Refusing to write an empty feature matrix")
    grid = matrix.grid
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(feature_header(grid, matrix.with_euler))
        for source, label, vector in matrix.rows():
            writer.writerow(
                [source, label] +
                [format_real(v) for v in vector.values] +
                [format_real(v) for v in vector.euler] +
                [grid.rows, grid.cols]
            )


def _parse_header(header, path):
    if header[:2] != LEADING_COLUMNS or header[-2:] != TRAILING_COLUMNS:
        raise FeatureFileError(
            "%s line 1: header must start with %s and end with %s" % (
                path, ",".join(LEADING_COLUMNS), ",".join(TRAILING_COLUMNS))
        )
    middle = header[2:-2]
    n_features = sum(1 for name in middle if name.startswith("f"))
    n_euler = len(middle) - n_features
    expected = ["f%d" % i for i in range(n_features)] + ["chi%d" % i for i in range(n_euler)]
    if middle != expected or n_features % FEATURES_PER_CELL:
        raise FeatureFileError(
            "%s line 1: feature columns must be f0..f{3G-1} optionally followed by chi0..chi{G-1}"
            % path
        )
    return n_features, n_euler


def read_feature_csv(path):
    try:
        with open(path, newline="") as f:
            records = list(csv.reader(f))
    except OSError as e:
        raise FeatureFileError("Could not read '%s': %s" % (path, e)) from e
    if not records:
        raise FeatureFileError("%s is empty" % path)

    header = records[0]
    n_features, n_euler = _parse_header(header, path)
    samples, labels, sources = [], [], []
    grid = None
    for line_no, record in enumerate(records[1:], start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise FeatureFileError(
                "%s line %d: expected %d columns, got %d" % (path, line_no, len(header), len(record))
            )
        try:
            numbers = [float(v) for v in record[2:-2]]
            row_grid = GridSpec(int(record[-2]), int(record[-1]))
        except ValueError as e:
            raise FeatureFileError("%s line %d: %s" % (path, line_no, e)) from None
        if grid is None:
            grid = row_grid
            cells = grid.rows * grid.cols
            if n_features != FEATURES_PER_CELL * cells or n_euler not in (0, cells):
                raise FeatureFileError(
                    "%s line %d: grid %dx%d does not match %d feature columns" % (
                        path, line_no, grid.rows, grid.cols, n_features)
                )
        elif row_grid != grid:
            raise FeatureFileError(
                "%s line %d: grid columns change within the file" % (path, line_no)
            )
        samples.append(FeatureVector(
            tuple(numbers[:n_features]), grid, tuple(numbers[n_features:])
        ))
        sources.append(record[0])
        labels.append(record[1])
    if not samples:
        raise FeatureFileError("%s holds a header but no rows" % path)
    return FeatureMatrix(samples, labels, sources)
