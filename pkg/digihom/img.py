"""
Grayscale and binary images: loading, binarization and grid partitioning.
"""
import csv
import logging
import os
import re

import numpy as np
from PIL import Image, UnidentifiedImageError

from .choices import (
    BINARIZE_METHODS, FIXED, IMAGE_EXTENSIONS, IMAGE_FORMATS, OTSU, PGM, REMAINDER_POLICIES
)
from .exceptions import ConfigurationError, GridError, ImageFormatError, ImageReadError
from .parser import parse_binarize, parse_grid

logger = logging.getLogger(__name__)

UNIFORM_OTSU_THRESHOLD = 128

# magic, width, height, maxval separated by whitespace or comment lines
_PGM_SEP = rb"(?:\s|#[^\n]*\n)+"
PGM_HEADER = re.compile(
    rb"\A(P[25])" + _PGM_SEP + rb"(\d+)" + _PGM_SEP + rb"(\d+)" + _PGM_SEP + rb"(\d+)\s"
)


class Pixel(tuple):
    """Lattice point `(row, col)`."""
    __slots__ = ()

    def __new__(cls, row, col):
        return super().__new__(cls, (row, col))

    @property
    def row(self):
        return self[0]

    @property
    def col(self):
        return self[1]

    def __repr__(self):
        return "(%d,%d)" % self


class GrayImage(object):
    def __init__(self, intensities):
        intensities = np.asarray(intensities)
        if intensities.ndim != 2 or 0 in intensities.shape:
            msg = "A gray image needs a non-empty 2D intensity array, got shape %s" % (
                intensities.shape, )
            raise ImageFormatError(msg)
        if intensities.size and (intensities.min() < 0 or intensities.max() > 255):
            raise ImageFormatError("intensity out of range, expected 0..255")
        self.intensities = intensities.astype(np.uint8)
        self.intensities.flags.writeable = False

    @property
    def height(self):
        return self.intensities.shape[0]

    @property
    def width(self):
        return self.intensities.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, GrayImage) and
            np.array_equal(self.intensities, other.intensities)
        )

    def __repr__(self):
        return "GrayImage(%dx%d)" % (self.height, self.width)


class BinaryImage(object):
    """
    Foreground ("black") pixel set on a height x width lattice,
    kept as a boolean mask.
    """

    def __init__(self, height, width, foreground=()):
        if height < 1 or width < 1:
            raise ImageFormatError(
                "Image dimensions must be positive, got %dx%d" % (height, width)
            )
        mask = np.zeros((height, width), dtype=bool)
        for row, col in foreground:
            if not (0 <= row < height and 0 <= col < width):
                msg = "Pixel (%d,%d) is outside a %dx%d image" % (row, col, height, width)
                raise ImageFormatError(msg)
            mask[row, col] = True
        self._set_mask(mask)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or 0 in mask.shape:
            raise ImageFormatError(
                "A binary image needs a non-empty 2D mask, got shape %s" % (mask.shape, )
            )
        image = cls.__new__(cls)
        image._set_mask(mask.copy())
        return image

    def _set_mask(self, mask):
        mask.flags.writeable = False
        self.mask = mask

    @property
    def height(self):
        return self.mask.shape[0]

    @property
    def width(self):
        return self.mask.shape[1]

    @property
    def foreground(self):
        """Foreground pixels in row-major order."""
        rows, cols = np.nonzero(self.mask)
        return [Pixel(int(r), int(c)) for r, c in zip(rows, cols)]

    def __len__(self):
        return int(self.mask.sum())

    def __contains__(self, pixel):
        row, col = pixel
        return (
            0 <= row < self.height and 0 <= col < self.width and
            bool(self.mask[row, col])
        )

    def with_pixel(self, row, col):
        mask = self.mask.copy()
        mask[row, col] = True
        return BinaryImage.from_mask(mask)

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(self.mask, other.mask)

    def __repr__(self):
        return "BinaryImage(%dx%d, %d foreground)" % (self.height, self.width, len(self))


def detect_format(path):
    ext = os.path.splitext(path)[1].lower()
    try:
        return IMAGE_EXTENSIONS[ext]
    except KeyError:
        msg = "Cannot infer the image format of '%s', supported extensions are %s" % (
            path, ", ".join(sorted(IMAGE_EXTENSIONS))
        )
        raise ImageFormatError(msg) from None


def load_image(path, fmt=None):
    """
    Load a PGM (P2/P5, maxval <= 255) or csv01 file as a GrayImage.
    csv01 is a 0/1 matrix where 1 is black (intensity 0).
    """
    fmt = fmt or detect_format(path)
    if fmt not in IMAGE_FORMATS:
        raise ConfigurationError(
            "Unknown image format '%s', expected one of %s" % (fmt, ", ".join(IMAGE_FORMATS))
        )
    if not os.path.isfile(path):
        raise ImageReadError("Image file '%s' does not exist" % path)

    if fmt == PGM:
        return _load_pgm(path)
    return _load_csv01(path)


def _check_pgm_header(path):
    try:
        with open(path, "rb") as f:
            head = f.read(1024)
    except OSError as e:
        raise ImageReadError("Could not read '%s': %s" % (path, e)) from e

    match = PGM_HEADER.match(head)
    if match is None:
        raise ImageFormatError(
            "'%s': malformed PGM header, expected P2 or P5 with width, height and maxval" % path
        )
    maxval = int(match.group(4))
    if maxval > 255:
        raise ImageFormatError(
            "'%s': unsupported maxval %d, only maxval <= 255 is accepted" % (path, maxval)
        )
    if maxval == 0:
        raise ImageFormatError("'%s': malformed PGM header, maxval is 0" % path)
    return maxval


def _load_pgm(path):
    """Samples are returned as stored, whatever the maxval."""
    maxval = _check_pgm_header(path)
    try:
        pil_image = Image.open(path)
    except (UnidentifiedImageError, ValueError, SyntaxError) as e:
        raise ImageFormatError("'%s': malformed PGM header (%s)" % (path, e)) from e
    except OSError as e:
        raise ImageReadError("Could not read '%s': %s" % (path, e)) from e

    with pil_image:
        if pil_image.format != "PPM":
            raise ImageFormatError("'%s' is not a PGM file" % path)
        if pil_image.mode not in ("L", "1"):
            raise ImageFormatError(
                "'%s' is not a graymap (mode %s)" % (path, pil_image.mode)
            )
        try:
            intensities = np.array(pil_image.convert("L"), dtype=np.int64)
        except ValueError as e:
            # Pillow reports sample values above maxval this way
            raise ImageFormatError("'%s': intensity out of range (%s)" % (path, e)) from e
        except OSError as e:
            raise ImageFormatError("'%s': truncated pixel data (%s)" % (path, e)) from e
    if maxval != 255:
        # Pillow stretches samples to 0..255, round(v * 255 / maxval) is invertible
        intensities = np.rint(intensities * maxval / 255.0).astype(np.int64)
    return GrayImage(intensities)


def _load_csv01(path):
    rows = []
    try:
        with open(path, newline="") as f:
            for line_no, record in enumerate(csv.reader(f), start=1):
                values = [value.strip() for value in record]
                if not any(values):
                    continue
                if rows and len(values) != len(rows[0]):
                    msg = "'%s' line %d: ragged row, expected %d values, got %d" % (
                        path, line_no, len(rows[0]), len(values)
                    )
                    raise ImageFormatError(msg)
                try:
                    row = [int(value) for value in values]
                except ValueError:
                    msg = "'%s' line %d: non-integer value" % (path, line_no)
                    raise ImageFormatError(msg) from None
                if any(value not in (0, 1) for value in row):
                    msg = "'%s' line %d: intensity out of range, csv01 accepts 0 and 1" % (
                        path, line_no
                    )
                    raise ImageFormatError(msg)
                rows.append(row)
    except OSError as e:
        raise ImageReadError("Could not read '%s': %s" % (path, e)) from e

    if not rows:
        raise ImageFormatError("'%s' holds no csv01 rows" % path)
    ink = np.array(rows, dtype=np.int64)
    return GrayImage(np.where(ink == 1, 0, 255))


def save_pgm(image, path):
    """Write a GrayImage as binary PGM (P5, maxval 255)."""
    picture = Image.fromarray(np.asarray(image.intensities, dtype=np.uint8))
    try:
        picture.save(path, format="PPM")
    except OSError as e:
        raise ImageReadError("Could not write '%s': %s" % (path, e)) from e


def to_gray(image):
    """Render a BinaryImage with black foreground on white."""
    return GrayImage(np.where(image.mask, 0, 255))


def otsu_threshold(image):
    """
    Threshold t in 1..255 maximizing the between-class variance of the
    256-bin histogram, where the dark class is intensity < t.
    The smallest maximizing t wins; uniform images get 128.
    """
    hist = np.bincount(image.intensities.ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        logger.warning(
            "Uniform image under Otsu, falling back to threshold %d", UNIFORM_OTSU_THRESHOLD
        )
        return UNIFORM_OTSU_THRESHOLD

    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    # Index t-1 of the cumulative sums describes the dark class [0, t)
    w0 = np.cumsum(hist)[:-1] / total
    w1 = 1.0 - w0
    mass0 = np.cumsum(hist * levels)[:-1] / total
    mu_total = (hist * levels).sum() / total
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = mass0 / w0
        mu1 = (mu_total - mass0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between = np.nan_to_num(between, nan=0.0, posinf=0.0, neginf=0.0)
    return int(np.argmax(between)) + 1


def binarize(image, method=OTSU):
    """
    Foreground is every pixel darker than the threshold.
    `method` is a BinarizeSpec or its text form (`otsu`, `fixed:T`).
    """
    spec = parse_binarize(method)
    if spec.method not in BINARIZE_METHODS:
        raise ConfigurationError(
            "Unknown binarize method '%s', expected one of %s" % (spec.method, ", ".join(BINARIZE_METHODS))
        )
    if spec.method == FIXED:
        threshold = spec.threshold
    else:
        threshold = otsu_threshold(image)
    return BinaryImage.from_mask(image.intensities < threshold)


def band_sizes(total, parts):
    """Balanced split: the first `total % parts` bands are one pixel wider."""
    size, remainder = divmod(total, parts)
    return [size + 1] * remainder + [size] * (parts - remainder)


def band_offsets(total, parts):
    offsets = [0]
    for size in band_sizes(total, parts):
        offsets.append(offsets[-1] + size)
    return offsets


def partition_grid(image, spec):
    """
    Split an image into spec.rows x spec.cols cells, returned in
    row-major order with local coordinates.
    """
    spec = parse_grid(spec)
    if spec.remainder_policy not in REMAINDER_POLICIES:
        raise ConfigurationError(
            "Unknown remainder policy '%s'" % (spec.remainder_policy, )
        )
    if spec.rows > image.height or spec.cols > image.width:
        msg = "Grid %dx%d is larger than the %dx%d image" % (
            spec.rows, spec.cols, image.height, image.width
        )
        raise GridError(msg)

    row_offsets = band_offsets(image.height, spec.rows)
    col_offsets = band_offsets(image.width, spec.cols)
    cells = []
    for top, bottom in zip(row_offsets, row_offsets[1:]):
        for left, right in zip(col_offsets, col_offsets[1:]):
            cells.append(BinaryImage.from_mask(image.mask[top:bottom, left:right]))
    return cells


def assemble_grid(cells, spec, height, width):
    """Inverse of partition_grid."""
    spec = parse_grid(spec)
    mask = np.zeros((height, width), dtype=bool)
    row_offsets = band_offsets(height, spec.rows)
    col_offsets = band_offsets(width, spec.cols)
    cell_iter = iter(cells)
    for top, bottom in zip(row_offsets, row_offsets[1:]):
        for left, right in zip(col_offsets, col_offsets[1:]):
            mask[top:bottom, left:right] = next(cell_iter).mask
    return BinaryImage.from_mask(mask)
