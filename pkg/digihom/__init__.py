__title__ = "digihom"
__description__ = "Digital simplicial homology of binary images, grid topological features and a classical evaluation harness."
__url__ = "https://github.com/digihom/digihom"
__version__ = "0.1.0"
__author__ = "digihom developers"
__author_email__ = "digihom-dev@users.noreply.github.com"
__license__ = "MIT"
__copyright__ = "Copyright 2026 digihom developers"

# Version synonym
VERSION = __version__
