import os
import shutil
import tempfile
import unittest

from digihom.img import BinaryImage
from digihom.linalg import modular_rank

SLOW_TESTS_ENV = "DIGIHOM_SLOW_TESTS"

GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")

slow_test = unittest.skipUnless(
    os.environ.get(SLOW_TESTS_ENV) == "1",
    "set %s=1 to run the full size suites" % SLOW_TESTS_ENV
)


def image_from_rows(*rows):
    """BinaryImage from strings where '#' is foreground and '.' background."""
    return BinaryImage.from_mask([[char == "#" for char in row] for row in rows])


def golden_path(name):
    return os.path.join(GOLDEN_DIR, name)


def read_golden(name):
    with open(golden_path(name)) as f:
        return f.read()


def off_by_one_rank(matrix):
    """A deliberately broken rank backend."""
    return modular_rank(matrix) - 1


class TempDirMixin(object):
    def make_temp_dir(self):
        path = tempfile.mkdtemp(prefix="digihom-")
        self.addCleanup(shutil.rmtree, path, True)
        return path

    def write_text(self, directory, name, text, mode="w"):
        path = os.path.join(directory, name)
        with open(path, mode) as f:
            f.write(text)
        return path
