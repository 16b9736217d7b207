"""
Independent oracles for the homology pipeline and the randomized
equivalence suite built on them.

None of this shares code with the enumeration or rank routines it checks.
"""
import logging
from collections import namedtuple
from fractions import Fraction

import numpy as np

from .complex import enumerate_simplices
from .exceptions import DigihomException, OracleSizeError
from .homology import boundary_matrix, homology_of_complex
from .img import BinaryImage
from .settings import digihom_settings

logger = logging.getLogger(__name__)

DENSITIES = (0.2, 0.5, 0.8)

EIGHT_NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
FOUR_NEIGHBOURS = ((-1, 0), (0, -1), (0, 1), (1, 0))


class UnionFind:
    """Union-find with path compression, counting components as it merges."""

    def __init__(self, size):
        self.parents = list(range(size))
        self.num_components = size

    def find(self, elem):
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        # compress path taken so all elements point to root directly
        while elem != root:
            self.parents[elem], elem = root, self.parents[elem]
        return root

    def union(self, a, b):
        root_a = self.find(a)
        root_b = self.find(b)
        if root_a == root_b:
            return False
        self.parents[root_b] = root_a
        self.num_components -= 1
        return True


def _label_components(mask, offsets):
    """Union-find over the True cells of `mask` with the given neighbourhood."""
    height, width = mask.shape
    cells = [(r, c) for r in range(height) for c in range(width) if mask[r, c]]
    ids = {cell: i for i, cell in enumerate(cells)}
    forest = UnionFind(len(cells))
    for (r, c), i in ids.items():
        for d_row, d_col in offsets:
            j = ids.get((r + d_row, c + d_col))
            if j is not None:
                forest.union(i, j)
    return forest, cells


def oracle_beta0_unionfind(image):
    """Number of 8-connected foreground components."""
    forest, _ = _label_components(image.mask, EIGHT_NEIGHBOURS)
    return forest.num_components


def oracle_beta1_background(image):
    """
    Number of bounded 4-connected background components, i.e. the holes
    of the foreground under the classical (8,4) pairing. Exploratory only.
    """
    padded = np.pad(~image.mask, 1, constant_values=True)
    forest, cells = _label_components(padded, FOUR_NEIGHBOURS)
    # the padding frame is background and reaches the corner cell 0
    outside = forest.find(0)
    roots = {forest.find(i) for i in range(len(cells))}
    return len(roots - {outside})


def oracle_naive_rank(matrix):
    """
    Rank by textbook Gaussian elimination over Fractions on a dense
    copy. Guarded by ORACLE_MAX_SIZE in both dimensions.
    """
    limit = digihom_settings.ORACLE_MAX_SIZE
    n_rows, n_cols = matrix.shape
    if n_rows > limit or n_cols > limit:
        msg = "Matrix %dx%d exceeds the dense oracle limit of %d" % (n_rows, n_cols, limit)
        raise OracleSizeError(msg)

    grid = [[Fraction(0)] * n_cols for _ in range(n_rows)]
    for (r, c), value in matrix.entries.items():
        grid[r][c] = Fraction(value)

    rank = 0
    for c in range(n_cols):
        pivot = None
        for r in range(rank, n_rows):
            if grid[r][c] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        grid[rank], grid[pivot] = grid[pivot], grid[rank]
        top = grid[rank]
        support = [k for k in range(c, n_cols) if top[k] != 0]
        for r in range(rank + 1, n_rows):
            if grid[r][c] != 0:
                ratio = grid[r][c] / top[c]
                row = grid[r]
                for k in support:
                    row[k] -= ratio * top[k]
        rank += 1
        if rank == n_rows:
            break
    return rank


def random_image(rng, max_size, density):
    height = int(rng.integers(1, max_size + 1))
    width = int(rng.integers(1, max_size + 1))
    return BinaryImage.from_mask(rng.random((height, width)) < density)


Failure = namedtuple("Failure", ("trial", "seed", "message"))

CheckReport = namedtuple(
    "CheckReport",
    ("trials", "consistent", "failures", "duality_findings", "rank_checks")
)


def check_image(image):
    """
    Run every oracle against one image. Returns the failure messages
    (empty when all agree), the profile and the number of rank comparisons.
    """
    problems = []
    complex_ = enumerate_simplices(image)
    try:
        profile = homology_of_complex(complex_)
    except DigihomException as e:
        return ["%s: %s" % (e.__class__.__name__, e)], None, 0

    beta0 = oracle_beta0_unionfind(image)
    if profile.beta0 != beta0:
        problems.append("beta0 %d != union-find %d" % (profile.beta0, beta0))

    s0, s1, s2, s3 = profile.s
    if profile.rank1 > min(s0, s1) or profile.rank2 > min(s1, s2):
        problems.append("rank out of bounds in %r" % (profile, ))
    if s2 - profile.rank2 != profile.rank3:
        problems.append(
            "higher homology does not vanish: s2 - rank2 = %d, rank3 = %d" % (
                s2 - profile.rank2, profile.rank3)
        )

    rank_checks = 0
    for q, rank in zip((1, 2, 3), (profile.rank1, profile.rank2, profile.rank3)):
        matrix = boundary_matrix(complex_, q)
        if max(matrix.shape) > digihom_settings.ORACLE_MAX_SIZE:
            continue
        expected = oracle_naive_rank(matrix)
        rank_checks += 1
        if expected != rank:
            problems.append("rank B%d = %d, dense oracle says %d" % (q, rank, expected))
    return problems, profile, rank_checks


def run_oracle_suite(trials, max_size, seed, densities=DENSITIES):
    """
    Trial i draws its image from the seed sequence (seed, i), cycling
    through `densities`, so every failure is reproducible on its own.
    """
    if trials == 0:
        logger.warning("Oracle suite called with zero trials, nothing was checked")
    failures = []
    findings = []
    rank_checks = 0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        image = random_image(rng, max_size, densities[trial % len(densities)])
        problems, profile, checks = check_image(image)
        rank_checks += checks
        if problems:
            failures.append(Failure(trial, [seed, trial], "; ".join(problems)))
            logger.error("Trial %d (seed [%d, %d]) failed: %s", trial, seed, trial, problems)
            continue
        holes = oracle_beta1_background(image)
        if holes != profile.beta1:
            findings.append(Failure(
                trial, [seed, trial],
                "beta1 %d != bounded 4-background components %d" % (profile.beta1, holes)
            ))
    return CheckReport(
        trials=trials,
        consistent=trials - len(failures),
        failures=failures,
        duality_findings=findings,
        rank_checks=rank_checks,
    )
