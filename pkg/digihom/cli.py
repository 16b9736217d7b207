"""
Command line entry point, installed as `digihom`.

Exit codes: 0 success, 1 bad input or configuration, 2 the homology
computation contradicted itself.
"""
import argparse
import logging
import os
import sys

from . import __version__
from .choices import IMAGE_FORMATS, MODELS
from .evaluation import (
    compare_models, default_protocol, evaluate, format_summary, grid_ablation,
    pca_projection, subject_feature_map, write_ablation_csv, write_accuracy_csv,
    write_feature_map_csv, write_projection_csv, write_report_json, write_rows_csv
)
from .exceptions import ConfigurationError, DigihomException, InconsistentHomology
from .features import build_feature_matrix, compile_label_pattern, read_feature_csv, write_feature_csv
from .homology import betti_numbers, format_profile
from .img import binarize, load_image
from .oracles import run_oracle_suite
from .parser import parse_binarize, parse_grid, parse_grid_list
from .settings import SETTINGS_MODULE_ENV, digihom_settings, reload_digihom_settings
from .synth import SynthConfig, generate_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCONSISTENT = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

DEFAULT_ABLATION_GRIDS = "6x54,3x27,3x18,3x9"


class DigihomArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_INPUT instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, "%s: error: %s\n" % (self.prog, message))


def _checked(parse):
    def convert(text):
        try:
            return parse(text)
        except ConfigurationError as e:
            raise argparse.ArgumentTypeError(str(e))
    convert.__name__ = parse.__name__
    return convert


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("'%s' is not an integer" % text)
    if value < 1:
        raise argparse.ArgumentTypeError("'%s' must be at least 1" % text)
    return value


def _non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("'%s' is not an integer" % text)
    if value < 0:
        raise argparse.ArgumentTypeError("'%s' must not be negative" % text)
    return value


def _model_list(text):
    models = [model.strip() for model in text.split(",") if model.strip()]
    unknown = [model for model in models if model not in MODELS]
    if unknown or not models:
        raise argparse.ArgumentTypeError(
            "models must be a comma separated subset of %s" % ",".join(MODELS)
        )
    return models


def configure_logging(level):
    package_logger = logging.getLogger("digihom")
    for handler in list(package_logger.handlers):
        if getattr(handler, "digihom_cli", False):
            package_logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.digihom_cli = True
    package_logger.addHandler(handler)
    package_logger.setLevel(level)


def _extraction_flags():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--grid", type=_checked(parse_grid), help="grid as RxC (default: GRID)")
    parser.add_argument("--binarize", type=_checked(parse_binarize),
                        help="otsu or fixed:T (default: BINARIZE)")
    parser.add_argument("--pattern", type=_checked(compile_label_pattern),
                        help="file name regex with one capture group (default: LABEL_PATTERN)")
    parser.add_argument("--jobs", type=_positive_int, help="worker processes (default: JOBS)")
    return parser


def _protocol_flags():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--runs", type=_positive_int, help="evaluation runs (default: RUNS)")
    parser.add_argument("--seed", type=int, help="seed of the first run (default: SEED)")
    parser.add_argument("--test-fraction", type=float, dest="test_fraction",
                        help="test share of every class (default: TEST_FRACTION)")
    parser.add_argument("--pca-var", type=float, dest="pca_fraction",
                        help="variance kept by PCA (default: PCA_VARIANCE)")
    parser.add_argument("--C", type=float, dest="C",
                        help="logistic regression inverse L2 strength (default: LOGREG_C)")
    parser.add_argument("--k", type=_positive_int, help="neighbours for knn (default: KNN_K)")
    parser.add_argument("--svm-C", type=float, dest="svm_C", help="SVM C (default: SVM_C)")
    parser.add_argument("--epochs", type=_positive_int, dest="svm_epochs",
                        help="SVM epochs (default: SVM_EPOCHS)")
    parser.add_argument("--jobs", type=_positive_int, help="worker processes (default: JOBS)")
    return parser


def build_parser():
    parser = DigihomArgumentParser(
        prog="digihom",
        description="Digital simplicial homology of binary images and topological features.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument("--settings", metavar="MODULE",
                        help="settings module holding a DIGIHOM dict")
    parser.add_argument("--log-level", choices=LOG_LEVELS, dest="log_level",
                        help="diagnostic verbosity (default: LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True
    extraction = _extraction_flags()
    protocol = _protocol_flags()

    betti = commands.add_parser("betti", help="Betti numbers of one image")
    betti.add_argument("image")
    betti.add_argument("--format", choices=IMAGE_FORMATS, help="default: from the extension")
    betti.add_argument("--binarize", type=_checked(parse_binarize),
                       help="otsu or fixed:T (default: BINARIZE)")
    betti.set_defaults(func=cmd_betti)

    features = commands.add_parser("features", parents=[extraction],
                                   help="feature CSV of an image directory")
    features.add_argument("directory")
    features.add_argument("--out", required=True, help="feature CSV to write")
    features.add_argument("--with-euler", action="store_true", dest="with_euler",
                          help="append the Euler characteristic of every cell")
    features.set_defaults(func=cmd_features)

    evaluate_ = commands.add_parser("evaluate", parents=[protocol],
                                    help="repeated stratified evaluation of a feature CSV")
    evaluate_.add_argument("features")
    evaluate_.add_argument("--model", choices=MODELS, default=MODELS[0])
    evaluate_.add_argument("--out", help="JSON report (default: <features>.<model>.json)")
    evaluate_.set_defaults(func=cmd_evaluate)

    check = commands.add_parser("check", help="randomized oracle equivalence suite")
    check.add_argument("--trials", type=_non_negative_int, default=1000)
    check.add_argument("--max-size", type=_positive_int, default=10, dest="max_size")
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_check)

    synth = commands.add_parser("synth", help="write a synthetic PGM dataset")
    synth.add_argument("directory")
    defaults = SynthConfig()
    synth.add_argument("--subjects", type=_positive_int, default=defaults.n_subjects)
    synth.add_argument("--samples", type=_positive_int, default=defaults.samples_per_subject)
    synth.add_argument("--height", type=_positive_int, default=defaults.height)
    synth.add_argument("--width", type=_positive_int, default=defaults.width)
    synth.add_argument("--density", type=float, default=defaults.base_density)
    synth.add_argument("--flip", type=float, default=defaults.flip_prob)
    synth.add_argument("--seed", type=int, default=defaults.seed)
    synth.set_defaults(func=cmd_synth)

    compare = commands.add_parser("compare", parents=[protocol],
                                  help="several models on paired splits")
    compare.add_argument("features")
    compare.add_argument("--models", type=_model_list, default=list(MODELS))
    compare.add_argument("--out", help="CSV table model,mean,std")
    compare.set_defaults(func=cmd_compare)

    ablation = commands.add_parser("ablation", parents=[_extraction_flags(), _protocol_flags()],
                                   conflict_handler="resolve",
                                   help="logistic regression accuracy per grid")
    ablation.add_argument("directory")
    ablation.add_argument("--grids", type=_checked(parse_grid_list),
                          default=parse_grid_list(DEFAULT_ABLATION_GRIDS))
    ablation.add_argument("--out", required=True, help="CSV table grid,mean,std")
    ablation.set_defaults(func=cmd_ablation)

    heatmap = commands.add_parser("heatmap", help="mean cell features of one subject")
    heatmap.add_argument("features")
    heatmap.add_argument("--label", required=True)
    heatmap.add_argument("--out", required=True, help="CSV table row,col,beta0,beta1,ratio")
    heatmap.set_defaults(func=cmd_heatmap)

    project = commands.add_parser("project", help="2D PCA projection of the first subjects")
    project.add_argument("features")
    project.add_argument("--subjects", type=_positive_int, default=10)
    project.add_argument("--out", required=True, help="CSV table source,label,pc1,pc2")
    project.set_defaults(func=cmd_project)
    return parser


def protocol_from_args(args, model):
    return default_protocol(
        model=model,
        runs=args.runs,
        test_fraction=args.test_fraction,
        pca_fraction=args.pca_fraction,
        seed_base=args.seed,
        C=args.C,
        k=args.k,
        svm_C=args.svm_C,
        svm_epochs=args.svm_epochs,
    )


def _jobs(args):
    return args.jobs or digihom_settings.JOBS


def cmd_betti(args):
    image = load_image(args.image, args.format)
    profile = betti_numbers(binarize(image, args.binarize or digihom_settings.BINARIZE))
    print(format_profile(profile))
    return EXIT_OK


def cmd_features(args):
    grid = args.grid or parse_grid(digihom_settings.GRID)
    pattern = args.pattern or compile_label_pattern(digihom_settings.LABEL_PATTERN)
    matrix, warnings = build_feature_matrix(
        args.directory, grid, pattern.pattern, args.binarize or digihom_settings.BINARIZE,
        with_euler=args.with_euler, jobs=_jobs(args),
    )
    write_feature_csv(matrix, args.out)
    print("N=%d G=%d warnings=%d" % (len(matrix), grid.rows * grid.cols, len(warnings)))
    return EXIT_OK


def cmd_evaluate(args):
    protocol = protocol_from_args(args, args.model)
    matrix = read_feature_csv(args.features)
    report = evaluate(matrix, protocol, jobs=_jobs(args))
    out = args.out or "%s.%s.json" % (os.path.splitext(args.features)[0], args.model)
    runs_csv = "%s.runs.csv" % os.path.splitext(out)[0]
    write_report_json(report, out)
    write_accuracy_csv(report, runs_csv)
    print(format_summary(report))
    print("report: %s" % out)
    print("runs: %s" % runs_csv)
    return EXIT_OK


def cmd_check(args):
    report = run_oracle_suite(args.trials, args.max_size, args.seed)
    print("%d/%d consistent" % (report.consistent, report.trials))
    print("rank comparisons: %d" % report.rank_checks)
    print("duality findings: %d" % len(report.duality_findings))
    for failure in report.failures:
        print(
            "trial %d (seed %s): %s" % (failure.trial, failure.seed, failure.message),
            file=sys.stderr,
        )
    return EXIT_INCONSISTENT if report.failures else EXIT_OK


def cmd_synth(args):
    cfg = SynthConfig(
        n_subjects=args.subjects,
        samples_per_subject=args.samples,
        height=args.height,
        width=args.width,
        base_density=args.density,
        flip_prob=args.flip,
        seed=args.seed,
    )
    paths = generate_dataset(cfg, args.directory)
    print("wrote %d images to %s" % (len(paths), args.directory))
    return EXIT_OK


def cmd_compare(args):
    protocol = protocol_from_args(args, args.models[0])
    matrix = read_feature_csv(args.features)
    reports = compare_models(matrix, protocol, args.models, jobs=_jobs(args))
    for report in reports.values():
        print(format_summary(report))
    if args.out:
        write_rows_csv(
            args.out, ("model", "mean", "std"),
            ((model, report.mean, report.std) for model, report in reports.items())
        )
    return EXIT_OK


def cmd_ablation(args):
    pattern = args.pattern or compile_label_pattern(digihom_settings.LABEL_PATTERN)
    results = grid_ablation(
        args.directory, args.grids, pattern.pattern,
        args.binarize or digihom_settings.BINARIZE,
        protocol_from_args(args, MODELS[0]), jobs=_jobs(args),
    )
    for grid, report in results:
        print("%dx%d %.4f ± %.4f" % (grid.rows, grid.cols, report.mean, report.std))
    write_ablation_csv(results, args.out)
    return EXIT_OK


def cmd_heatmap(args):
    rows = subject_feature_map(read_feature_csv(args.features), args.label)
    write_feature_map_csv(rows, args.out)
    print("wrote %d cells to %s" % (len(rows), args.out))
    return EXIT_OK


def cmd_project(args):
    rows = pca_projection(read_feature_csv(args.features), args.subjects)
    write_projection_csv(rows, args.out)
    print("wrote %d points to %s" % (len(rows), args.out))
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    if args.settings:
        os.environ[SETTINGS_MODULE_ENV] = args.settings
        reload_digihom_settings()
    try:
        configure_logging(args.log_level or digihom_settings.LOG_LEVEL)
        return args.func(args)
    except InconsistentHomology as e:
        print("digihom: inconsistent homology: %s" % e, file=sys.stderr)
        return EXIT_INCONSISTENT
    except (DigihomException, ImportError, ValueError) as e:
        print("digihom: error: %s" % e, file=sys.stderr)
        return EXIT_INPUT
