import logging
from collections import namedtuple

from .complex import MAX_DIM, enumerate_simplices
from .exceptions import ComplexError, InconsistentHomology
from .linalg import IntegerMatrix, smith_normal_form
from .settings import digihom_settings

logger = logging.getLogger(__name__)


HomologyProfile = namedtuple(
    "HomologyProfile",
    ("beta0", "beta1", "chi", "s", "rank1", "rank2", "rank3", "consistent")
)


def boundary_matrix(complex_, q):
    """
    B_q as an s_{q-1} x s_q matrix; column j is the alternating sum of the
    faces of the j-th q-simplex, rows indexed by the (q-1)-simplex order.
    """
    if not 1 <= q <= MAX_DIM:
        raise ComplexError("Boundary operators exist for q in 1..%d, got %r" % (MAX_DIM, q))
    face_index = complex_.index[q - 1]
    entries = {}
    for col, simplex in enumerate(complex_.simplices[q]):
        for sign, face in simplex.faces():
            try:
                row = face_index[face]
            except KeyError:
                msg = "Face %r of %r is missing from the complex" % (face, simplex)
                raise ComplexError(msg) from None
            entries[(row, col)] = sign
    return IntegerMatrix(len(complex_.simplices[q - 1]), len(complex_.simplices[q]), entries)


def integer_rank(matrix):
    """Exact rank over the rationals with the configured RANK_BACKEND."""
    if matrix.nnz == 0:
        return 0
    return digihom_settings.RANK_BACKEND(matrix)


def euler_characteristic(s):
    s0, s1, s2, s3 = s
    return s0 - s1 + s2 - s3


def verify_smith_forms(matrices, ranks):
    for q, (matrix, rank) in enumerate(zip(matrices, ranks), start=1):
        factors = smith_normal_form(matrix)
        if len(factors) != rank:
            msg = "Smith normal form of B%d has %d invariant factors but rank %d" % (
                q, len(factors), rank
            )
            raise InconsistentHomology(msg)
        torsion = [d for d in factors if d != 1]
        if torsion:
            logger.warning("B%d has torsion coefficients %s", q, torsion)


def homology_of_complex(complex_):
    s = tuple(complex_.counts())
    matrices = [boundary_matrix(complex_, q) for q in range(1, MAX_DIM + 1)]
    rank1, rank2, rank3 = [integer_rank(matrix) for matrix in matrices]

    beta0 = s[0] - rank1
    # dim ker B1 - rank B2
    beta1 = s[1] - rank1 - rank2
    chi = beta0 - beta1
    consistent = chi == euler_characteristic(s)
    profile = HomologyProfile(beta0, beta1, chi, s, rank1, rank2, rank3, consistent)

    if not consistent:
        msg = (
            "Euler characteristic mismatch: beta0 - beta1 = %d but "
            "s0 - s1 + s2 - s3 = %d (%r)"
        ) % (chi, euler_characteristic(s), profile)
        raise InconsistentHomology(msg)
    if beta1 < 0 or (beta0 == 0) != (s[0] == 0):
        raise InconsistentHomology("Impossible Betti numbers %r" % (profile, ))

    if digihom_settings.VERIFY_SNF:
        verify_smith_forms(matrices, (rank1, rank2, rank3))
    return profile


def betti_numbers(image):
    """
    beta0 = s0 - rank B1, beta1 = (s1 - rank B1) - rank B2 and
    chi = beta0 - beta1, checked against the alternating simplex count.
    """
    return homology_of_complex(enumerate_simplices(image))


def format_profile(profile):
    return "beta0=%d beta1=%d chi=%d s=%s consistent=%s" % (
        profile.beta0, profile.beta1, profile.chi,
        ",".join(str(n) for n in profile.s),
        "true" if profile.consistent else "false",
    )
