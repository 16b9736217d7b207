import io
import json
import logging
import os
from contextlib import redirect_stderr, redirect_stdout
from unittest import TestCase, mock

from digihom.cli import EXIT_INCONSISTENT, EXIT_INPUT, EXIT_OK, main
from digihom.features import read_feature_csv
from digihom.settings import override_settings, reload_digihom_settings
from digihom.synth import SynthConfig, generate_dataset

from tests.helpers import TempDirMixin


class CliTestCase(TempDirMixin, TestCase):
    def setUp(self):
        self.dir = self.make_temp_dir()

    def tearDown(self):
        package_logger = logging.getLogger("digihom")
        for handler in list(package_logger.handlers):
            if getattr(handler, "digihom_cli", False):
                package_logger.removeHandler(handler)
        package_logger.setLevel(logging.NOTSET)

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def make_dataset(self, n_subjects=4, samples=5, height=24, width=60):
        directory = os.path.join(self.dir, "images")
        generate_dataset(SynthConfig(n_subjects, samples, height, width, 0.5, 0.03, 1), directory)
        return directory

    def make_features(self, grid="3x9", **kwargs):
        out = os.path.join(self.dir, "features.csv")
        code, _, _ = self.run_cli("features", self.make_dataset(**kwargs), "--grid", grid, "--out", out)
        self.assertEqual(code, EXIT_OK)
        return out


class BettiCommandTests(CliTestCase):
    def test_black_block(self):
        path = self.write_text(self.dir, "block.csv", "1,1\n1,1\n")
        code, out, err = self.run_cli("betti", path)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out, "beta0=1 beta1=0 chi=1 s=4,6,4,1 consistent=true\n")

    def test_white_image(self):
        path = self.write_text(self.dir, "empty.csv", "0,0\n0,0\n")
        code, out, _ = self.run_cli("betti", path)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(out.startswith("beta0=0 beta1=0 chi=0 "))

    def test_ring_from_pgm(self):
        path = self.write_text(self.dir, "ring.pgm", "P2 3 3 255\n0 0 0\n0 255 0\n0 0 0\n")
        code, out, _ = self.run_cli("betti", path, "--binarize", "fixed:128")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(out.startswith("beta0=1 beta1=1 chi=0 s=8,12,4,0"))

    def test_missing_file(self):
        code, out, err = self.run_cli("betti", os.path.join(self.dir, "missing.pgm"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertEqual(out, "")
        self.assertIn("does not exist", err)

    def test_bad_binarize_flag(self):
        path = self.write_text(self.dir, "block.csv", "1\n")
        code, out, err = self.run_cli("betti", path, "--binarize", "median")
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("usage", err)

    def test_inconsistent_homology_exit_code(self):
        path = self.write_text(self.dir, "block.csv", "1,1\n1,1\n")
        with override_settings(RANK_BACKEND="tests.helpers.off_by_one_rank"):
            code, out, err = self.run_cli("betti", path)
        self.assertEqual(code, EXIT_INCONSISTENT)
        self.assertEqual(out, "")


class FeaturesCommandTests(CliTestCase):
    def test_features(self):
        directory = self.make_dataset()
        self.write_text(directory, "notes.txt", "skip me\n")
        out = os.path.join(self.dir, "features.csv")
        code, stdout, _ = self.run_cli("features", directory, "--grid", "3x9", "--out", out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(stdout, "N=20 G=27 warnings=1\n")
        matrix = read_feature_csv(out)
        self.assertEqual(matrix.to_array().shape, (20, 81))

    def test_with_euler(self):
        out = os.path.join(self.dir, "features.csv")
        code, _, _ = self.run_cli(
            "features", self.make_dataset(), "--grid", "1x3", "--out", out, "--with-euler"
        )
        self.assertEqual(code, EXIT_OK)
        with open(out) as f:
            header = f.readline().strip().split(",")
        self.assertEqual(header[-5:], ["chi0", "chi1", "chi2", "grid_rows", "grid_cols"])

    def test_unmatched_directory(self):
        self.write_text(self.dir, "notes.txt", "nothing\n")
        code, _, err = self.run_cli("features", self.dir, "--out", os.path.join(self.dir, "f.csv"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("label pattern", err)

    def test_invalid_grid(self):
        code, _, _ = self.run_cli("features", self.dir, "--grid", "0x3", "--out", "f.csv")
        self.assertEqual(code, EXIT_INPUT)

    def test_pattern_without_group(self):
        code, _, _ = self.run_cli("features", self.dir, "--pattern", r"\d+", "--out", "f.csv")
        self.assertEqual(code, EXIT_INPUT)


class EvaluateCommandTests(CliTestCase):
    def test_evaluate_writes_report_and_plot_data(self):
        features = self.make_features()
        report = os.path.join(self.dir, "report.json")
        code, out, _ = self.run_cli(
            "evaluate", features, "--runs", "3", "--seed", "4", "--out", report
        )
        self.assertEqual(code, EXIT_OK)
        self.assertIn("±", out)
        with open(report) as f:
            data = json.load(f)
        self.assertEqual(data["seeds"], [4, 5, 6])
        self.assertEqual(data["model"], "logreg")
        with open(os.path.join(self.dir, "report.runs.csv")) as f:
            self.assertEqual(len(f.read().splitlines()), 4)

    def test_default_report_path(self):
        features = self.make_features()
        code, _, _ = self.run_cli("evaluate", features, "--runs", "1", "--model", "knn")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.exists(os.path.join(self.dir, "features.knn.json")))

    def test_single_run_prints_zero_std(self):
        features = self.make_features()
        code, out, _ = self.run_cli("evaluate", features, "--runs", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("± 0.0000", out)

    def test_one_class(self):
        features = self.make_features(n_subjects=1)
        code, _, err = self.run_cli("evaluate", features, "--runs", "2")
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("2 classes", err)

    def test_flags_are_checked_before_reading_features(self):
        missing = os.path.join(self.dir, "missing.csv")
        for command in ("evaluate", "compare"):
            code, _, err = self.run_cli(command, missing, "--test-fraction", "1.5")
            self.assertEqual(code, EXIT_INPUT)
            self.assertIn("test fraction", err)
            self.assertNotIn("missing.csv", err)

    def test_unknown_model(self):
        code, _, _ = self.run_cli("evaluate", "f.csv", "--model", "cnn")
        self.assertEqual(code, EXIT_INPUT)


class CheckCommandTests(CliTestCase):
    def test_check_passes(self):
        code, out, _ = self.run_cli("check", "--trials", "60", "--max-size", "6", "--seed", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("60/60 consistent", out)

    def test_zero_trials(self):
        code, out, _ = self.run_cli("check", "--trials", "0")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("0/0 consistent", out)

    def test_injected_bug_fails(self):
        with override_settings(RANK_BACKEND="tests.helpers.off_by_one_rank"):
            code, _, err = self.run_cli("check", "--trials", "20", "--max-size", "5")
        self.assertNotEqual(code, EXIT_OK)
        self.assertIn("seed", err)


class OtherCommandTests(CliTestCase):
    def test_synth(self):
        target = os.path.join(self.dir, "synth")
        code, out, _ = self.run_cli(
            "synth", target, "--subjects", "2", "--samples", "3", "--height", "8", "--width", "16"
        )
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(os.listdir(target)), 6)

    def test_synth_rejects_bad_flip(self):
        code, _, _ = self.run_cli("synth", self.dir, "--flip", "0.7")
        self.assertEqual(code, EXIT_INPUT)

    def test_compare(self):
        features = self.make_features()
        table = os.path.join(self.dir, "compare.csv")
        code, out, _ = self.run_cli(
            "compare", features, "--models", "logreg,knn", "--runs", "2", "--out", table
        )
        self.assertEqual(code, EXIT_OK)
        with open(table) as f:
            rows = f.read().splitlines()
        self.assertEqual(rows[0], "model,mean,std")
        self.assertEqual([row.split(",")[0] for row in rows[1:]], ["logreg", "knn"])

    def test_ablation(self):
        table = os.path.join(self.dir, "ablation.csv")
        code, out, _ = self.run_cli(
            "ablation", self.make_dataset(), "--grids", "3x9,1x3", "--runs", "2", "--out", table
        )
        self.assertEqual(code, EXIT_OK)
        with open(table) as f:
            rows = f.read().splitlines()
        self.assertEqual([row.split(",")[0] for row in rows], ["grid", "3x9", "1x3"])

    def test_heatmap_and_project(self):
        features = self.make_features(grid="2x3")
        heatmap = os.path.join(self.dir, "heatmap.csv")
        points = os.path.join(self.dir, "points.csv")
        self.assertEqual(self.run_cli("heatmap", features, "--label", "001", "--out", heatmap)[0], EXIT_OK)
        self.assertEqual(self.run_cli("project", features, "--subjects", "2", "--out", points)[0], EXIT_OK)
        with open(heatmap) as f:
            self.assertEqual(len(f.read().splitlines()), 7)
        with open(points) as f:
            self.assertEqual(len(f.read().splitlines()), 11)

    def test_settings_flag(self):
        path = self.write_text(self.dir, "block.csv", "1,1\n1,1\n")
        with mock.patch.dict(os.environ):
            code, _, _ = self.run_cli("--settings", "tests.settings", "betti", path)
            self.assertEqual(code, EXIT_OK)
        reload_digihom_settings()

    def test_missing_settings_module(self):
        path = self.write_text(self.dir, "block.csv", "1,1\n1,1\n")
        with mock.patch.dict(os.environ):
            code, _, err = self.run_cli("--settings", "tests.nowhere", "betti", path)
        reload_digihom_settings()
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("tests.nowhere", err)

    def test_no_command(self):
        code, _, _ = self.run_cli()
        self.assertEqual(code, EXIT_INPUT)
