import re
from collections import namedtuple

from pypeg2 import List, csl, maybe_some, parse, some

from .choices import BALANCED, FIXED, OTSU
from .exceptions import ConfigurationError


class Count(str):
    grammar = re.compile(r'[0-9]+')

    @property
    def value(self):
        return int(self)


class Grid(List):
    """
    `6x54` style grid, self[0] is rows and self[1] is cols
    """
    grammar = Count, ['x', 'X'], Count

    @property
    def rows(self):
        return self[0].value

    @property
    def cols(self):
        return self[1].value


class GridList(List):
    grammar = csl(Grid, separator=',')


class Otsu(str):
    grammar = 'otsu'


class FixedThreshold(List):
    grammar = 'fixed', ':', Count

    @property
    def threshold(self):
        return self[0].value


class Binarize(List):
    grammar = [Otsu, FixedThreshold]

    @property
    def method(self):
        return self[0]


class PixelText(List):
    grammar = '(', Count, ',', Count, ')'

    @property
    def coords(self):
        return (self[0].value, self[1].value)


class SimplexLine(List):
    """
    One line of a complex dump: `q: (r,c) (r,c) ...`,
    self[0] is the dimension, the rest are vertices
    """
    grammar = Count, ':', some(PixelText)

    @property
    def dim(self):
        return self[0].value

    @property
    def vertices(self):
        return [pixel.coords for pixel in self[1:]]


class ComplexDump(List):
    grammar = maybe_some(SimplexLine)


GridSpec = namedtuple("GridSpec", ("rows", "cols", "remainder_policy"))
GridSpec.__new__.__defaults__ = (BALANCED, )

BinarizeSpec = namedtuple("BinarizeSpec", ("method", "threshold"))
BinarizeSpec.__new__.__defaults__ = (None, )


def parse_text(text, grammar, what):
    try:
        return parse(text.strip(), grammar)
    except (SyntaxError, TypeError) as e:
        # pypeg2 raises TypeError instead of SyntaxError
        # when trailing text is left unparsed
        msg = "Invalid %s '%s': %s" % (what, text, e)
        raise ConfigurationError(msg) from None


def _to_grid_spec(grid, text):
    if grid.rows < 1 or grid.cols < 1:
        msg = "Invalid grid '%s': rows and cols must be at least 1" % text
        raise ConfigurationError(msg)
    return GridSpec(grid.rows, grid.cols)


def parse_grid(text):
    """Parse `RxC` into a GridSpec."""
    if isinstance(text, GridSpec):
        return text
    return _to_grid_spec(parse_text(text, Grid, "grid"), text)


def parse_grid_list(text):
    """Parse `6x54,3x27` into a list of GridSpecs."""
    grids = parse_text(text, GridList, "grid list")
    return [_to_grid_spec(grid, text) for grid in grids]


def parse_binarize(text):
    """Parse `otsu` or `fixed:T` into a BinarizeSpec."""
    if isinstance(text, BinarizeSpec):
        return text
    parsed = parse_text(text, Binarize, "binarize method")
    method = parsed.method
    if isinstance(method, Otsu):
        return BinarizeSpec(OTSU)

    threshold = method.threshold
    if threshold > 255:
        msg = "Invalid binarize method '%s': threshold must be in 0..255" % text
        raise ConfigurationError(msg)
    return BinarizeSpec(FIXED, threshold)


def parse_complex_dump(text):
    """
    Parse a complex dump into a list of (dim, [(row, col), ...]) pairs
    in file order.
    """
    dump = parse_text(text, ComplexDump, "complex dump")
    simplices = []
    for line in dump:
        vertices = line.vertices
        if len(vertices) != line.dim + 1:
            msg = (
                "Invalid complex dump: a %d-simplex needs %d vertices, got %d"
            ) % (line.dim, line.dim + 1, len(vertices))
            raise ConfigurationError(msg)
        simplices.append((line.dim, vertices))
    return simplices
