"""
Exact integer linear algebra for boundary matrices.

Nothing in here touches floating point: ranks are computed either by
fraction-free (Bareiss) elimination on Python integers or modulo two
large primes with Bareiss as the arbiter.
"""
import logging
from functools import lru_cache

import numpy as np

from .exceptions import ComplexError
from .settings import digihom_settings

logger = logging.getLogger(__name__)

PRIME_LOW = 2 ** 30
PRIME_HIGH = 2 ** 31

# Deterministic Miller-Rabin witnesses, exact below 3.4e12
_MR_WITNESSES = (2, 3, 5, 7, 11, 13)


class IntegerMatrix(object):
    """
    Sparse n_rows x n_cols integer matrix, entries keyed by (row, col).
    Zero entries are never stored.
    """

    def __init__(self, n_rows, n_cols, entries=None):
        if n_rows < 0 or n_cols < 0:
            raise ComplexError("Matrix shape must be non-negative, got %dx%d" % (n_rows, n_cols))
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.entries = {}
        items = entries.items() if isinstance(entries, dict) else (entries or ())
        for item in items:
            (row, col), value = (item[0], item[1]) if len(item) == 2 else (item[:2], item[2])
            if not (0 <= row < n_rows and 0 <= col < n_cols):
                msg = "Entry (%d,%d) is outside a %dx%d matrix" % (row, col, n_rows, n_cols)
                raise ComplexError(msg)
            if (row, col) in self.entries:
                raise ComplexError("Duplicate entry at (%d,%d)" % (row, col))
            if value:
                self.entries[(row, col)] = int(value)

    @classmethod
    def from_dense(cls, rows):
        rows = [list(row) for row in rows]
        n_rows = len(rows)
        n_cols = len(rows[0]) if rows else 0
        entries = {
            (i, j): value
            for i, row in enumerate(rows)
            for j, value in enumerate(row)
            if value
        }
        return cls(n_rows, n_cols, entries)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.entries)

    def to_dense(self):
        """List of lists of Python ints."""
        dense = [[0] * self.n_cols for _ in range(self.n_rows)]
        for (row, col), value in self.entries.items():
            dense[row][col] = value
        return dense

    def to_array(self):
        array = np.zeros(self.shape, dtype=np.int64)
        for (row, col), value in self.entries.items():
            array[row, col] = value
        return array

    def columns(self):
        """One {row: value} dict per column."""
        columns = [{} for _ in range(self.n_cols)]
        for (row, col), value in self.entries.items():
            columns[col][row] = value
        return columns

    def transpose(self):
        return IntegerMatrix(
            self.n_cols, self.n_rows,
            {(col, row): value for (row, col), value in self.entries.items()}
        )

    def __eq__(self, other):
        return (
            isinstance(other, IntegerMatrix) and
            self.shape == other.shape and
            self.entries == other.entries
        )

    def __repr__(self):
        return "IntegerMatrix(%dx%d, nnz=%d)" % (self.n_rows, self.n_cols, self.nnz)


def bareiss_rank(matrix):
    """
    Rank over the rationals by fraction-free Gaussian elimination.

    Every intermediate entry is a minor of the input, so the division by
    the previous pivot is exact and Python integers never overflow.
    """
    rows = matrix.to_dense()
    n_rows, n_cols = matrix.shape
    rank = 0
    prev_pivot = 1
    for col in range(n_cols):
        if rank == n_rows:
            break
        pivot_row = next((i for i in range(rank, n_rows) if rows[i][col]), None)
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        pivot = rows[rank][col]
        top = rows[rank]
        for i in range(rank + 1, n_rows):
            row = rows[i]
            factor = row[col]
            for j in range(col + 1, n_cols):
                row[j] = (pivot * row[j] - factor * top[j]) // prev_pivot
            row[col] = 0
        prev_pivot = pivot
        rank += 1
    return rank


def is_prime(n):
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def random_primes(seed, count=2):
    """`count` distinct primes drawn uniformly from (2^30, 2^31) under `seed`."""
    rng = np.random.default_rng(seed)
    primes = []
    while len(primes) < count:
        candidate = int(rng.integers(PRIME_LOW + 1, PRIME_HIGH)) | 1
        if is_prime(candidate) and candidate not in primes:
            primes.append(candidate)
    return tuple(primes)


def rank_mod_p(matrix, p):
    """
    Rank over GF(p) by sparse column reduction: each column is reduced
    against stored pivot columns keyed by their lowest nonzero row.
    """
    pivots = {}
    for column in matrix.columns():
        col = {row: value % p for row, value in column.items() if value % p}
        while col:
            low = max(col)
            pivot = pivots.get(low)
            if pivot is None:
                inverse = pow(col[low], -1, p)
                pivots[low] = {row: value * inverse % p for row, value in col.items()}
                break
            factor = col[low]
            for row, value in pivot.items():
                reduced = (col.get(row, 0) - factor * value) % p
                if reduced:
                    col[row] = reduced
                else:
                    col.pop(row, None)
    return len(pivots)


def modular_rank(matrix, seed=None):
    """
    Rank modulo two distinct random primes above 2^30. Agreement is
    accepted, otherwise fraction-free elimination decides.
    """
    if seed is None:
        seed = digihom_settings.RANK_SEED
    p, q = random_primes(seed)
    rank_p = rank_mod_p(matrix, p)
    rank_q = rank_mod_p(matrix, q)
    if rank_p == rank_q:
        return rank_p
    logger.warning(
        "Modular ranks disagree on %r (%d mod %d, %d mod %d), using Bareiss elimination",
        matrix, rank_p, p, rank_q, q
    )
    return bareiss_rank(matrix)


def smith_normal_form(matrix):
    """
    Invariant factors d1 | d2 | ... | dr of an integer matrix, computed
    with unimodular row and column operations on a dense copy.
    """
    a = matrix.to_dense()
    n_rows, n_cols = matrix.shape
    factors = []
    for t in range(min(n_rows, n_cols)):
        # Bring the smallest nonzero entry of the trailing block to (t, t)
        candidates = [
            (abs(a[i][j]), i, j)
            for i in range(t, n_rows)
            for j in range(t, n_cols)
            if a[i][j]
        ]
        if not candidates:
            break
        _, i, j = min(candidates)
        a[t], a[i] = a[i], a[t]
        for row in a:
            row[t], row[j] = row[j], row[t]

        while True:
            clean = True
            for i in range(t + 1, n_rows):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                    if a[i][t]:
                        a[t], a[i] = a[i], a[t]
                        clean = False
            for j in range(t + 1, n_cols):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    for row in a:
                        row[j] -= q * row[t]
                    if a[t][j]:
                        for row in a:
                            row[t], row[j] = row[j], row[t]
                        clean = False
            if not clean:
                continue

            pivot = a[t][t]
            offender = next(
                (
                    i for i in range(t + 1, n_rows)
                    if any(a[i][j] % pivot for j in range(t + 1, n_cols))
                ),
                None
            )
            if offender is None:
                break
            a[t] = [x + y for x, y in zip(a[t], a[offender])]

        factors.append(abs(a[t][t]))
    return factors
