import csv
import json
import os
from unittest import TestCase, mock

import numpy as np

from digihom.choices import KNN, LOGREG, SVM
from digihom.evaluation import (
    compare_models, default_protocol, evaluate, grid_ablation, make_report, pca_projection,
    prepare_run, report_to_json, subject_feature_map, summarize, write_ablation_csv,
    write_accuracy_csv, write_report_json
)
from digihom.exceptions import ConfigurationError, EvaluationError, LearningError
from digihom.features import FeatureMatrix, FeatureVector, build_feature_matrix
from digihom.parser import GridSpec
from digihom.settings import override_settings
from digihom.synth import SynthConfig, generate_dataset

from tests.helpers import TempDirMixin, slow_test


def gaussian_matrix(n_subjects=6, per_subject=5, grid=GridSpec(1, 2), spread=0.3, seed=0):
    """Feature matrix whose rows cluster around one random centre per subject."""
    rng = np.random.default_rng(seed)
    width = 3 * grid.rows * grid.cols
    samples, labels, sources = [], [], []
    for subject in range(1, n_subjects + 1):
        centre = rng.uniform(0, 10, size=width)
        for sample in range(1, per_subject + 1):
            values = centre + rng.normal(0, spread, size=width)
            samples.append(FeatureVector(tuple(float(v) for v in values), grid))
            labels.append("%03d" % subject)
            sources.append("%03d_%d.pgm" % (subject, sample))
    return FeatureMatrix(samples, labels, sources)


class SummaryTests(TestCase):
    def test_two_runs(self):
        mean, std = summarize([0.9, 1.0])
        self.assertAlmostEqual(mean, 0.95)
        self.assertAlmostEqual(std, 0.05)

    def test_single_run(self):
        self.assertEqual(summarize([0.75]), (0.75, 0.0))

    def test_report_json_layout(self):
        report = make_report(LOGREG, [0, 1], [0.9, 1.0], {"pca_fraction": 0.99})
        data = json.loads(report_to_json(report))
        self.assertEqual(
            list(data)[:7], ["model", "runs", "seeds", "accuracies", "mean", "std", "config"]
        )
        self.assertEqual(data["runs"], 2)
        self.assertEqual(data["seeds"], [0, 1])


class ProtocolTests(TestCase):
    def test_defaults_come_from_settings(self):
        with override_settings(RUNS=7, SEED=40, LOGREG_C=3.0):
            protocol = default_protocol()
        self.assertEqual((protocol.runs, protocol.seed_base, protocol.C), (7, 40, 3.0))
        self.assertEqual(protocol.pca_fraction, 0.99)

    def test_none_overrides_are_ignored(self):
        self.assertEqual(default_protocol(runs=None, model=KNN).model, KNN)

    def test_invalid_values(self):
        for overrides in ({"model": "cnn"}, {"runs": 0}, {"test_fraction": 1.0}, {"pca_fraction": 0}):
            with self.subTest(overrides=overrides):
                with self.assertRaises(ConfigurationError):
                    default_protocol(**overrides)

    def test_unknown_field(self):
        with self.assertRaises(ConfigurationError):
            default_protocol(learning_rate=0.1)


class EvaluateTests(TestCase):
    def setUp(self):
        self.matrix = gaussian_matrix()

    def test_runs_use_consecutive_seeds(self):
        report = evaluate(self.matrix, default_protocol(runs=3, seed_base=10))
        self.assertEqual(report.seeds, [10, 11, 12])
        self.assertEqual(len(report.accuracies), 3)
        self.assertAlmostEqual(report.mean, float(np.mean(report.accuracies)))
        self.assertAlmostEqual(report.std, float(np.std(report.accuracies)))

    def test_single_run_has_zero_std(self):
        report = evaluate(self.matrix, default_protocol(runs=1))
        self.assertEqual(report.std, 0.0)
        self.assertEqual(report.mean, report.accuracies[0])

    def test_every_model_separates_clusters(self):
        for model in (LOGREG, KNN):
            with self.subTest(model=model):
                report = evaluate(self.matrix, default_protocol(model=model, runs=3))
                self.assertGreaterEqual(report.mean, 0.9)

    def test_svm_separates_clusters(self):
        report = evaluate(gaussian_matrix(n_subjects=3), default_protocol(model=SVM, runs=3))
        self.assertGreaterEqual(report.mean, 0.9)

    def test_byte_identical_reports(self):
        protocol = default_protocol(runs=4, seed_base=5)
        self.assertEqual(
            report_to_json(evaluate(self.matrix, protocol)),
            report_to_json(evaluate(self.matrix, protocol))
        )

    def test_parallel_runs_match_serial(self):
        protocol = default_protocol(runs=4)
        self.assertEqual(
            report_to_json(evaluate(self.matrix, protocol, jobs=1)),
            report_to_json(evaluate(self.matrix, protocol, jobs=2))
        )

    def test_single_class_matrix(self):
        matrix = gaussian_matrix(n_subjects=1)
        with self.assertRaises(LearningError):
            evaluate(matrix, default_protocol(runs=1))

    def test_failing_run_names_its_seed(self):
        samples = list(self.matrix.samples)
        labels = list(self.matrix.labels)
        # a class with a single sample cannot be split
        labels[-1] = "999"
        matrix = FeatureMatrix(samples, labels, self.matrix.sources)
        with self.assertRaises(EvaluationError) as ctx:
            evaluate(matrix, default_protocol(runs=2, seed_base=17))
        self.assertEqual(ctx.exception.seed, 17)
        self.assertIn("17", str(ctx.exception))

    def test_unexpected_error_names_its_seed(self):
        with mock.patch("digihom.evaluation.classify", side_effect=ValueError("solver blew up")):
            with self.assertRaises(EvaluationError) as ctx:
                evaluate(self.matrix, default_protocol(runs=3, seed_base=40), jobs=1)
        self.assertEqual(ctx.exception.seed, 40)
        self.assertIn("ValueError: solver blew up", str(ctx.exception))

    def test_config_snapshot(self):
        report = evaluate(self.matrix, default_protocol(model=KNN, runs=1, k=1))
        self.assertEqual(report.config["k"], 1)
        self.assertNotIn("C", report.config)


class LeakageTests(TestCase):
    def test_perturbing_test_rows_leaves_fitted_parameters_unchanged(self):
        matrix = gaussian_matrix()
        X = matrix.to_array()
        labels = np.asarray(matrix.labels)
        protocol = default_protocol(runs=1)
        original = prepare_run(X, labels, protocol, seed=3)

        for row in original.test:
            perturbed = X.copy()
            perturbed[row] = perturbed[row] * 100 + 17
            mutated = prepare_run(perturbed, labels, protocol, seed=3)
            self.assertTrue(np.array_equal(mutated.train, original.train))
            for field in ("minimum", "maximum"):
                self.assertTrue(np.array_equal(
                    getattr(mutated.scaler, field), getattr(original.scaler, field)
                ))
            for field in ("mean", "components", "explained_variance"):
                self.assertTrue(np.array_equal(
                    getattr(mutated.pca, field), getattr(original.pca, field)
                ))
            self.assertEqual(mutated.pca.n_components, original.pca.n_components)


class OutputTests(TempDirMixin, TestCase):
    def setUp(self):
        self.dir = self.make_temp_dir()
        self.report = make_report(SVM, [3, 4], [0.5, 0.75], {"svm_C": 1.0})

    def test_write_report_json(self):
        path = os.path.join(self.dir, "report.json")
        write_report_json(self.report, path)
        with open(path) as f:
            data = json.load(f)
        self.assertEqual(data["model"], SVM)
        self.assertEqual(data["accuracies"], [0.5, 0.75])
        self.assertEqual(data["mean"], 0.625)

    def test_write_accuracy_csv(self):
        path = os.path.join(self.dir, "runs.csv")
        write_accuracy_csv(self.report, path)
        with open(path) as f:
            self.assertEqual(f.read(), "run,accuracy\n0,0.5\n1,0.75\n")

    def test_write_ablation_csv(self):
        path = os.path.join(self.dir, "ablation.csv")
        write_ablation_csv([(GridSpec(3, 9), self.report)], path)
        with open(path) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["grid", "mean", "std"])
        self.assertEqual(rows[1], ["3x9", "0.625", "0.125"])


class PlotDataTests(TestCase):
    def setUp(self):
        self.matrix = gaussian_matrix(grid=GridSpec(2, 3))

    def test_subject_feature_map(self):
        rows = subject_feature_map(self.matrix, "002")
        self.assertEqual(len(rows), 6)
        self.assertEqual([(row, col) for row, col, _, _, _ in rows][:4], [(0, 0), (0, 1), (0, 2), (1, 0)])
        own = self.matrix.to_array()[5:10]
        self.assertAlmostEqual(rows[0][2], own[:, 0].mean())

    def test_unknown_subject(self):
        with self.assertRaises(ConfigurationError):
            subject_feature_map(self.matrix, "404")

    def test_pca_projection(self):
        rows = pca_projection(self.matrix, n_subjects=2)
        self.assertEqual(len(rows), 10)
        self.assertEqual({label for _, label, _, _ in rows}, {"001", "002"})


class ModelComparisonTests(TestCase):
    def test_compare_models_uses_paired_seeds(self):
        reports = compare_models(gaussian_matrix(), default_protocol(runs=3), (LOGREG, KNN))
        self.assertEqual(list(reports), [LOGREG, KNN])
        self.assertEqual(reports[LOGREG].seeds, reports[KNN].seeds)


class SyntheticEndToEndTests(TempDirMixin, TestCase):
    """Synthetic textures through extraction and evaluation."""

    def build(self, cfg, grid="3x9"):
        directory = self.make_temp_dir()
        generate_dataset(cfg, directory)
        matrix, warnings = build_feature_matrix(directory, grid, r"^(\d+)_\d+")
        self.assertEqual(warnings, [])
        return matrix

    def test_small_dataset(self):
        cfg = SynthConfig(10, 5, 24, 120, 0.5, 0.03, 1)
        matrix = self.build(cfg)
        self.assertEqual(len(matrix), 50)
        report = evaluate(matrix, default_protocol(runs=5))
        self.assertGreaterEqual(report.mean, 0.9)

    def test_small_dataset_model_ordering_and_noise(self):
        cfg = SynthConfig(10, 5, 24, 120, 0.5, 0.03, 1)
        protocol = default_protocol(runs=10)
        reports = compare_models(self.build(cfg), protocol, (LOGREG, KNN, SVM))
        logreg = reports[LOGREG].mean
        self.assertGreaterEqual(logreg, 0.9)
        self.assertGreaterEqual(logreg, reports[KNN].mean - 0.02)
        self.assertLessEqual(reports[SVM].mean, logreg + 0.02)

        noisy = self.build(cfg._replace(flip_prob=0.15))
        self.assertLess(evaluate(noisy, protocol).mean, logreg)

    def test_grid_ablation(self):
        directory = self.make_temp_dir()
        generate_dataset(SynthConfig(4, 5, 24, 60, 0.5, 0.03, 2), directory)
        results = grid_ablation(directory, ["3x9", "1x3"], protocol=default_protocol(runs=2))
        self.assertEqual([grid for grid, _ in results], [GridSpec(3, 9), GridSpec(1, 3)])
        self.assertEqual(results[0][1].runs, 2)

    @slow_test
    def test_full_size_dataset(self):
        cfg = SynthConfig(20, 5, 48, 482, 0.5, 0.03, 0)
        matrix = self.build(cfg)
        self.assertEqual(len(matrix), 100)
        self.assertEqual(matrix.to_array().shape[1], 81)
        protocol = default_protocol(runs=30)
        logreg = evaluate(matrix, protocol, jobs=4)
        self.assertGreaterEqual(logreg.mean, 0.9)

        knn = evaluate(matrix, protocol._replace(model=KNN), jobs=4)
        self.assertGreaterEqual(logreg.mean, knn.mean - 0.02)
        svm = evaluate(matrix, protocol._replace(model=SVM), jobs=4)
        self.assertLessEqual(svm.mean, logreg.mean + 0.02)

        noisy = self.build(cfg._replace(flip_prob=0.15))
        self.assertLess(evaluate(noisy, protocol, jobs=4).mean, logreg.mean)
