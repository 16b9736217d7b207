"""
Digital adjacency and the digital simplicial complex of a binary image.

A digital (8,q)-simplex is a set of q+1 foreground pixels that are pairwise
8-adjacent. In the plane such cliques fit inside a 2x2 block, so q <= 3.
"""
from collections import namedtuple
from itertools import combinations

from .choices import ADJACENCIES, EIGHT, FOUR
from .exceptions import ComplexError, ConfigurationError
from .img import Pixel
from .parser import parse_complex_dump

MAX_DIM = 3

# Neighbours that come after a pixel in row-major order
FORWARD_OFFSETS = ((0, 1), (1, -1), (1, 0), (1, 1))

SimplexCounts = namedtuple("SimplexCounts", ("s0", "s1", "s2", "s3"))


def are_adjacent(p, q, adj=EIGHT):
    if adj not in ADJACENCIES:
        raise ConfigurationError(
            "Unknown adjacency '%s', expected one of %s" % (adj, ", ".join(ADJACENCIES))
        )
    d_row = abs(p[0] - q[0])
    d_col = abs(p[1] - q[1])
    if adj == FOUR:
        return d_row + d_col == 1
    return max(d_row, d_col) == 1


class Simplex(tuple):
    """
    Vertices of a digital simplex in strictly increasing row-major order,
    which also fixes its orientation.
    """
    __slots__ = ()

    def __new__(cls, vertices):
        vertices = sorted(Pixel(*vertex) for vertex in vertices)
        for a, b in zip(vertices, vertices[1:]):
            if a == b:
                raise ComplexError("Duplicate vertex %r in simplex" % (a, ))
        return super().__new__(cls, vertices)

    @property
    def dim(self):
        return len(self) - 1

    @property
    def vertices(self):
        return list(self)

    def faces(self):
        """(sign, face) pairs of the boundary, sign = (-1)^i for dropped vertex i."""
        return [
            ((-1) ** i, self[:i] + self[i + 1:])
            for i in range(len(self))
        ]

    def __repr__(self):
        return "<%s>" % ", ".join(repr(vertex) for vertex in self)


class SimplicialComplex(object):
    """
    Canonically sorted simplices per dimension 0..3 plus, per dimension,
    a map from vertex tuple to column index.
    """

    def __init__(self, simplices):
        if len(simplices) > MAX_DIM + 1:
            raise ComplexError("Digital simplices in the plane have dimension <= %d" % MAX_DIM)
        simplices = [
            sorted(s if isinstance(s, Simplex) else Simplex(s) for s in dim_list)
            for dim_list in simplices
        ]
        simplices += [[] for _ in range(MAX_DIM + 1 - len(simplices))]
        for q, dim_list in enumerate(simplices):
            for simplex in dim_list:
                if simplex.dim != q:
                    msg = "Simplex %r listed under dimension %d" % (simplex, q)
                    raise ComplexError(msg)
        self.simplices = simplices
        self.index = [
            {simplex: i for i, simplex in enumerate(dim_list)}
            for dim_list in simplices
        ]
        for q, dim_list in enumerate(simplices):
            if len(self.index[q]) != len(dim_list):
                raise ComplexError("Duplicate %d-simplex in complex" % q)

    def counts(self):
        return SimplexCounts(*(len(dim_list) for dim_list in self.simplices))

    def missing_faces(self):
        """Faces of listed simplices that are not listed themselves."""
        missing = []
        for q in range(1, MAX_DIM + 1):
            for simplex in self.simplices[q]:
                for _, face in simplex.faces():
                    if face not in self.index[q - 1]:
                        missing.append(Simplex(face))
        return missing

    def dump(self):
        return dump_complex(self)

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and self.simplices == other.simplices

    def __repr__(self):
        return "SimplicialComplex(s=%s)" % (tuple(self.counts()), )


def enumerate_simplices(image):
    """
    Every clique of pairwise 8-adjacent foreground pixels is emitted once,
    from its first vertex in row-major order, so only the forward half of
    each neighbourhood is scanned.
    """
    simplices = [[] for _ in range(MAX_DIM + 1)]
    for pixel in image.foreground:
        row, col = pixel
        forward = [
            Pixel(row + d_row, col + d_col)
            for d_row, d_col in FORWARD_OFFSETS
            if (row + d_row, col + d_col) in image
        ]
        simplices[0].append(Simplex([pixel]))
        for size in range(1, MAX_DIM + 1):
            for others in combinations(forward, size):
                if all(are_adjacent(a, b) for a, b in combinations(others, 2)):
                    simplices[size].append(Simplex((pixel, ) + others))
    return SimplicialComplex(simplices)


def simplex_counts(complex_):
    return complex_.counts()


def dump_complex(complex_):
    """One simplex per line, `q: (r,c) (r,c) ...`, canonically sorted."""
    lines = []
    for q, dim_list in enumerate(complex_.simplices):
        for simplex in dim_list:
            lines.append("%d: %s" % (q, " ".join(repr(vertex) for vertex in simplex)))
    return "\n".join(lines) + ("\n" if lines else "")


def load_complex_dump(text):
    simplices = [[] for _ in range(MAX_DIM + 1)]
    for dim, vertices in parse_complex_dump(text):
        if dim > MAX_DIM:
            raise ComplexError("Digital simplices in the plane have dimension <= %d" % MAX_DIM)
        simplices[dim].append(vertices)
    return SimplicialComplex(simplices)
