class DigihomException(Exception):
    """Base class for exceptions in this package."""


class ConfigurationError(DigihomException):
    """Invalid setting, flag or mini-language value."""


class ImageReadError(DigihomException):
    """Image file could not be read."""


class ImageFormatError(DigihomException):
    """Image file does not parse in the declared format."""


class GridError(DigihomException):
    """Grid does not fit the image."""


class ComplexError(DigihomException):
    """Malformed simplicial complex."""


class InconsistentHomology(DigihomException):
    """
    Homology computation contradicts itself.

    This always signals a bug in the rank or enumeration code,
    never bad input.
    """


class OracleSizeError(DigihomException):
    """Input too large for a dense oracle."""


class FeatureFileError(DigihomException):
    """Malformed feature CSV file."""


class FeatureExtractionError(DigihomException):
    """Dataset could not be turned into a feature matrix."""


class LearningError(DigihomException):
    """Invalid training or prediction input."""


class EvaluationError(DigihomException):
    """An evaluation run failed."""

    def __init__(self, msg, seed=None):
        super().__init__(msg)
        self.seed = seed
