"""``sbss`` command line: imbalance, split, evaluate, compare, score.

Exit codes: 0 success, 1 usage error, 2 data error, 3 computation error.
"""

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .data import DataError, dataset_summary, load_csv, normalize_minmax
from .evaluation import EvaluationError, EvaluationReport, KnnConfig, evaluate_assignments, run_experiment
from .similarity import KINDS, SimilarityError, pairwise_matrix, save_matrix, save_matrix_summary
from .splitter import GROUP_CRITERIA, STRATEGIES, SplitConfig, SplitError, load_fold_file, split_dataset
from .stats import ComparisonVerdict, PairedSeries, render_score_table, score_comparisons, wilcoxon_signed_rank

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_COMPUTE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class IncomparableError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _similarity(text):
    if text.lower() not in KINDS:
        raise argparse.ArgumentTypeError(
            f"invalid similarity {text!r}; choose one of: {', '.join(KINDS)}"
        )
    return text.lower()


def _add_input(p):
    p.add_argument("input", help="CSV file")
    p.add_argument("--label-column", default="-1", help="label column name or zero-based index (default: last)")
    p.add_argument("--no-header", action="store_true", help="the CSV has no header row")


def _add_split_flags(p):
    p.add_argument("--k", type=int, default=10, help="number of folds (default 10)")
    p.add_argument("--strategy", choices=STRATEGIES, default="sbss")
    p.add_argument("--similarity", type=_similarity, default="correlation", metavar="{" + ",".join(KINDS) + "}")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--group-criterion", choices=GROUP_CRITERIA, default="pivot")
    p.add_argument("--no-normalize", action="store_true", help="use features as given")
    p.add_argument("--output", "-o", help="output file (default: stdout)")


def build_parser():
    parser = _Parser(prog="sbss", description="Similarity-based stratified K-fold splitting toolkit")
    parser.add_argument("--version", action="version", version=f"sbss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("imbalance", help="dataset summary with class imbalance")
    _add_input(p)

    p = sub.add_parser("split", help="write a fold file")
    _add_input(p)
    _add_split_flags(p)
    p.add_argument("--dump-matrix", help="also write the distance matrix (binary) and a JSON summary")

    p = sub.add_parser("evaluate", help="repeated K-fold KNN evaluation")
    _add_input(p)
    _add_split_flags(p)
    p.add_argument("--repetitions", type=_positive, default=10)
    p.add_argument("--knn-k", type=_positive, default=5, help="KNN neighbors (default 5)")
    p.add_argument("--folds", action="append", help="evaluate this fold file instead of splitting (repeatable)")

    p = sub.add_parser("compare", help="Wilcoxon signed-rank comparison of two reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pairing", choices=("repetition", "fold"), default="repetition")
    p.add_argument("--output", "-o")

    p = sub.add_parser("score", help="tally win/tie/loss over verdict files")
    p.add_argument("verdicts", nargs="+")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _threads():
    try:
        return int(os.environ.get("SBSS_THREADS", "1") or 1)
    except ValueError:
        raise UsageError("SBSS_THREADS must be an integer") from None


def _manifest(args, fingerprint=None):
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "output")}
    doc = {"command": args.command, "flags": flags, "version": __version__}
    if fingerprint is not None:
        doc["dataset_sha256"] = fingerprint
    return doc


def _emit(doc, output, manifest=None):
    text = json.dumps(doc, indent=2) + "\n"
    if output is None:
        sys.stdout.write(text)
        return
    with open(output, "w", encoding="utf-8") as fh:
        fh.write(text)
    if manifest is not None:
        # the timestamp lives only in the sidecar so the main output stays byte-stable
        stamped = dict(manifest, timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())
        with open(output + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(stamped, indent=2) + "\n")


def _load(args):
    d = load_csv(args.input, label_column=args.label_column, has_header=not args.no_header)
    return d, _sha256(args.input)


def cmd_imbalance(args):
    d, _ = _load(args)
    _emit(dataset_summary(d), None)


def _config(args, n):
    if args.k < 2 or args.k > n:
        raise UsageError(f"--k must be between 2 and the number of samples ({n}), got {args.k}")
    return SplitConfig(
        k=args.k, kind=args.similarity, seed=args.seed, strategy=args.strategy,
        group_criterion=args.group_criterion,
    )


def cmd_split(args):
    d, fingerprint = _load(args)
    cfg = _config(args, d.n)
    if not args.no_normalize:
        d = normalize_minmax(d)
    matrix = None
    if cfg.strategy == "sbss":
        matrix = pairwise_matrix(cfg.kind, d, n_jobs=_threads())
        if args.dump_matrix:
            save_matrix(matrix, args.dump_matrix)
            save_matrix_summary(matrix, args.dump_matrix + ".json")
    fa = split_dataset(d, cfg, m=matrix)
    manifest = _manifest(args, fingerprint)
    doc = fa.to_json(d.name, extra={"manifest": manifest})
    _emit(doc, args.output, manifest)


def cmd_evaluate(args):
    d, fingerprint = _load(args)
    knn = KnnConfig(args.knn_k)
    if not args.no_normalize:
        d = normalize_minmax(d)
    manifest = _manifest(args, fingerprint)
    if args.folds:
        assignments = []
        for path in args.folds:
            try:
                fa, _ = load_fold_file(path, n=d.n)
            except (OSError, ValueError) as exc:
                raise DataError(f"{path}: {exc}") from None
            assignments.append(fa)
        report = evaluate_assignments(d, assignments, knn, fingerprint=fingerprint)
    else:
        _config(args, d.n)
        try:
            report = run_experiment(
                d,
                strategy=args.strategy,
                kind=args.similarity,
                k=args.k,
                repetitions=args.repetitions,
                base_seed=args.seed,
                knn=knn,
                n_jobs=_threads(),
                group_criterion=args.group_criterion,
                fingerprint=fingerprint,
            )
        except EvaluationError as exc:
            if "smallest training partition" in str(exc):
                raise UsageError(str(exc)) from None
            raise
    report.extra["manifest"] = manifest
    _emit(report.to_json(), args.output, manifest)


def _read_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return EvaluationReport.from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {path}: {exc}") from None


def compare_reports(a, b, alpha=0.05, pairing="repetition"):
    """Wilcoxon verdict for report ``a`` against report ``b`` (win means ``a`` is better)."""
    problems = []
    if a.dataset_fingerprint != b.dataset_fingerprint:
        problems.append("dataset fingerprints differ")
    if a.k != b.k:
        problems.append(f"k differs ({a.k} vs {b.k})")
    if a.repetitions != b.repetitions:
        problems.append(f"repetitions differ ({a.repetitions} vs {b.repetitions})")
    if problems:
        raise IncomparableError("incomparable reports: " + "; ".join(problems))
    if pairing == "repetition":
        xa, xb = a.rep_mean_test, b.rep_mean_test
    else:
        xa, xb = np.ravel(a.test_acc), np.ravel(b.test_acc)
    kind = a.kind if a.kind is not None else a.strategy
    series = PairedSeries(tuple(xa), tuple(xb), dataset=a.dataset, model="knn", kind=str(kind))
    return wilcoxon_signed_rank(series, alpha)


def cmd_compare(args):
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    verdict = compare_reports(_read_report(args.report_a), _read_report(args.report_b), args.alpha, args.pairing)
    doc = verdict.to_json()
    doc["pairing"] = args.pairing
    if args.output:
        _emit(doc, args.output)
    else:
        _emit(doc, None)
    print(verdict.headline())


def cmd_score(args):
    verdicts = []
    for path in args.verdicts:
        try:
            with open(path, encoding="utf-8") as fh:
                verdicts.append(ComparisonVerdict.from_json(json.load(fh)))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot read verdict {path}: {exc}") from None
    table = score_comparisons(verdicts)
    if args.format == "json":
        _emit(table, None)
    else:
        print(render_score_table(table))


COMMANDS = {
    "imbalance": cmd_imbalance,
    "split": cmd_split,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "score": cmd_score,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"sbss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SimilarityError, IncomparableError, SplitError) as exc:
        print(f"sbss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"sbss {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
