import os
from unittest import TestCase, mock

from digihom.linalg import bareiss_rank, modular_rank
from digihom.settings import (
    SETTINGS_MODULE_ENV, DigihomSettings, digihom_settings, import_from_string,
    override_settings, reload_digihom_settings
)


class SettingsTests(TestCase):
    def tearDown(self):
        reload_digihom_settings()

    def test_defaults_without_user_settings(self):
        settings = DigihomSettings({})
        self.assertEqual(settings.GRID, "6x54")
        self.assertEqual(settings.PCA_VARIANCE, 0.99)
        self.assertEqual(settings.LOGREG_C, 10.0)
        self.assertEqual(settings.RUNS, 100)

    def test_user_settings_win(self):
        settings = DigihomSettings({"GRID": "3x27"})
        self.assertEqual(settings.GRID, "3x27")
        self.assertEqual(settings.BINARIZE, "otsu")

    def test_invalid_setting_name(self):
        with self.assertRaises(AttributeError):
            DigihomSettings({}).NOT_A_SETTING

    def test_import_strings_are_resolved(self):
        self.assertIs(DigihomSettings({}).RANK_BACKEND, modular_rank)

    def test_bad_import_string(self):
        with self.assertRaises(ImportError):
            import_from_string("digihom.linalg.no_such_rank", "RANK_BACKEND")

    def test_settings_module_from_environment(self):
        with mock.patch.dict(os.environ, {SETTINGS_MODULE_ENV: "tests.settings"}):
            reload_digihom_settings()
            self.assertEqual(digihom_settings.RUNS, 10)
            self.assertEqual(digihom_settings.LOG_LEVEL, "ERROR")

    def test_missing_settings_module(self):
        with mock.patch.dict(os.environ, {SETTINGS_MODULE_ENV: "tests.no_such_settings"}):
            reload_digihom_settings()
            with self.assertRaises(ImportError):
                digihom_settings.GRID

    def test_override_settings_is_temporary(self):
        before = digihom_settings.RANK_BACKEND
        with override_settings(RANK_BACKEND="digihom.linalg.bareiss_rank", SEED=9):
            self.assertIs(digihom_settings.RANK_BACKEND, bareiss_rank)
            self.assertEqual(digihom_settings.SEED, 9)
        self.assertIs(digihom_settings.RANK_BACKEND, before)

    def test_reload_clears_cached_values(self):
        settings = DigihomSettings({"RUNS": 3})
        self.assertEqual(settings.RUNS, 3)
        settings._user_settings = {"RUNS": 4}
        self.assertEqual(settings.RUNS, 3)
        settings.reload()
        settings._user_settings = {"RUNS": 4}
        self.assertEqual(settings.RUNS, 4)
