#!/usr/bin/env python
import os
import sys
import subprocess
import unittest


FLAKE8_ARGS = ['digihom', 'tests', 'setup.py', 'runtests.py']
WARNING_COLOR = '\033[93m'
END_COLOR = '\033[0m'


def flake8_main(args):
    print('Running flake8 code linting')
    ret = subprocess.call(['flake8'] + args)
    msg = (
        WARNING_COLOR + 'flake8 failed\n' + END_COLOR
        if ret else 'flake8 passed\n'
    )
    print(msg)
    return ret


def runtests():
    ret = flake8_main(FLAKE8_ARGS)
    os.environ.setdefault('DIGIHOM_SETTINGS_MODULE', 'tests.settings')
    # Test ids given on the command line run alone, e.g. tests.test_img
    loader = unittest.TestLoader()
    if sys.argv[1:]:
        suite = loader.loadTestsFromNames(sys.argv[1:])
    else:
        suite = loader.discover('tests', top_level_dir=os.path.dirname(os.path.abspath(__file__)))
    result = unittest.TextTestRunner(verbosity=1).run(suite)
    sys.exit(ret or not result.wasSuccessful())  # Fail build if code linting fails


if __name__ == '__main__':
    runtests()
