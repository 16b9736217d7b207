"""
Settings for digihom are all namespaced in the DIGIHOM setting.
Point the `DIGIHOM_SETTINGS_MODULE` environment variable at an importable
module, for example `mysite.topology` containing:
DIGIHOM = {
    'GRID': '3x27',
    'RUNS': 10,
}
This module provides the `digihom_settings` object, that is used to access
digihom settings, checking for user settings first, then falling
back to the defaults.
"""
import os
from contextlib import contextmanager
from importlib import import_module

SETTINGS_MODULE_ENV = "DIGIHOM_SETTINGS_MODULE"

DEFAULTS = {
    'GRID': '6x54',
    'BINARIZE': 'otsu',
    'LABEL_PATTERN': r'^(\d+)_\d+',
    'RANK_BACKEND': 'digihom.linalg.modular_rank',
    'RANK_SEED': 0,
    'VERIFY_SNF': False,
    'ORACLE_MAX_SIZE': 500,
    'PCA_VARIANCE': 0.99,
    'LOGREG_C': 10.0,
    'LOGREG_MAX_ITER': 1000,
    'LOGREG_TOL': 1e-6,
    'KNN_K': 1,
    'SVM_C': 1.0,
    'SVM_EPOCHS': 50,
    'RUNS': 100,
    'TEST_FRACTION': 0.2,
    'SEED': 0,
    'JOBS': 1,
    'LOG_LEVEL': 'WARNING',
}


# List of settings that may be in string import notation.
IMPORT_STRINGS = [
    'RANK_BACKEND',
]


def perform_import(val, setting_name):
    """
    If the given setting is a string import notation,
    then perform the necessary import or imports.
    """
    if val is None:
        return None
    elif isinstance(val, str):
        return import_from_string(val, setting_name)
    elif isinstance(val, (list, tuple)):
        return [import_from_string(item, setting_name) for item in val]
    return val


def import_from_string(val, setting_name):
    """
    Attempt to import a class or function from a string representation.
    """
    try:
        module_path, attr = val.rsplit('.', 1)
        return getattr(import_module(module_path), attr)
    except (ImportError, AttributeError, ValueError) as e:
        msg = (
            "Could not import '%s' for DIGIHOM setting '%s'. %s: %s."
        ) % (val, setting_name, e.__class__.__name__, e)
        raise ImportError(msg)


def load_user_settings():
    module_path = os.environ.get(SETTINGS_MODULE_ENV)
    if not module_path:
        return {}
    try:
        module = import_module(module_path)
    except ImportError as e:
        msg = "Could not import settings module '%s' (%s=%s): %s" % (
            module_path, SETTINGS_MODULE_ENV, module_path, e
        )
        raise ImportError(msg)
    return dict(getattr(module, 'DIGIHOM', {}))


class DigihomSettings:
    """
    A settings object, that allows DIGIHOM settings to be accessed as properties.
    For example:
        from digihom.settings import digihom_settings
        print(digihom_settings.GRID)
    Any setting with string import paths will be automatically resolved
    and return the callable, rather than the string literal.
    """

    def __init__(self, user_settings=None, defaults=None, import_strings=None):
        if user_settings is not None:
            self._user_settings = user_settings
        self.defaults = defaults or DEFAULTS
        self.import_strings = import_strings or IMPORT_STRINGS
        self._cached_attrs = set()

    @property
    def user_settings(self):
        if not hasattr(self, '_user_settings'):
            self._user_settings = load_user_settings()
        return self._user_settings

    def __getattr__(self, attr):
        if attr not in self.defaults:
            raise AttributeError("Invalid DIGIHOM setting: '%s'" % attr)

        try:
            # Check if present in user settings
            val = self.user_settings[attr]
        except KeyError:
            # Fall back to defaults
            val = self.defaults[attr]

        # Coerce import strings into callables
        if attr in self.import_strings:
            val = perform_import(val, attr)

        # Cache the result
        self._cached_attrs.add(attr)
        setattr(self, attr, val)
        return val

    def reload(self):
        for attr in self._cached_attrs:
            delattr(self, attr)
        self._cached_attrs.clear()
        if hasattr(self, '_user_settings'):
            delattr(self, '_user_settings')


digihom_settings = DigihomSettings(None, DEFAULTS, IMPORT_STRINGS)


def reload_digihom_settings():
    digihom_settings.reload()


@contextmanager
def override_settings(**values):
    """
    Temporarily layer `values` over the current user settings.
    """
    previous = dict(digihom_settings.user_settings)
    digihom_settings.reload()
    digihom_settings._user_settings = {**previous, **values}
    try:
        yield digihom_settings
    finally:
        digihom_settings.reload()
        digihom_settings._user_settings = previous
