"""
Synthetic labeled binary textures: one random prototype per subject and
per-sample copies of it with independent pixel flips.
"""
import logging
import os
from collections import namedtuple

import numpy as np

from .exceptions import ConfigurationError, ImageReadError
from .img import BinaryImage, save_pgm, to_gray

logger = logging.getLogger(__name__)


SynthConfig = namedtuple(
    "SynthConfig",
    ("n_subjects", "samples_per_subject", "height", "width", "base_density", "flip_prob", "seed")
)
SynthConfig.__new__.__defaults__ = (20, 5, 48, 482, 0.5, 0.03, 0)


def validate_config(cfg):
    for field in ("n_subjects", "samples_per_subject", "height", "width"):
        if getattr(cfg, field) < 1:
            raise ConfigurationError("%s must be at least 1, got %r" % (field, getattr(cfg, field)))
    if not 0 <= cfg.base_density <= 1:
        raise ConfigurationError("base_density must be in [0, 1], got %r" % (cfg.base_density, ))
    if not 0 <= cfg.flip_prob < 0.5:
        raise ConfigurationError("flip_prob must be in [0, 0.5), got %r" % (cfg.flip_prob, ))
    return cfg


def generate_prototype(cfg, subject_index):
    """Bernoulli(base_density) image seeded by (seed, subject_index) alone."""
    if not 0 <= subject_index < cfg.n_subjects:
        raise ConfigurationError(
            "Subject index %r outside 0..%d" % (subject_index, cfg.n_subjects - 1)
        )
    rng = np.random.default_rng([cfg.seed, subject_index])
    return BinaryImage.from_mask(rng.random((cfg.height, cfg.width)) < cfg.base_density)


def sample_instance(prototype, flip_prob, instance_seed):
    rng = np.random.default_rng(instance_seed)
    flips = rng.random((prototype.height, prototype.width)) < flip_prob
    return BinaryImage.from_mask(prototype.mask ^ flips)


def sample_name(subject_index, sample_index):
    """`<subject>_<sample>.pgm`, both 1-based, subject zero padded to 3 digits."""
    return "%03d_%d.pgm" % (subject_index + 1, sample_index + 1)


def generate_dataset(cfg, directory):
    """Write every sample as a P5 PGM, black = foreground. Returns the paths."""
    validate_config(cfg)
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise ImageReadError("Could not create '%s': %s" % (directory, e)) from e

    paths = []
    for subject in range(cfg.n_subjects):
        prototype = generate_prototype(cfg, subject)
        for sample in range(cfg.samples_per_subject):
            instance = sample_instance(prototype, cfg.flip_prob, [cfg.seed, subject, sample])
            path = os.path.join(directory, sample_name(subject, sample))
            save_pgm(to_gray(instance), path)
            paths.append(path)
    logger.info("Wrote %d synthetic images to %s", len(paths), directory)
    return paths
