"""Command-line entry point: python -m app.cli <command> ...

Exit codes: 0 success, 2 validation error, 3 degenerate-data error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import (
    PRESETS,
    SAMPLER_NAMES,
    SCOPES,
    BlobClass,
    BlobSpec,
    CVConfig,
    emit_scatter,
    format_table,
    generate_blobs,
    make_sampler,
    resample_dataset,
    retained_counts,
    run_experiment,
    write_report,
)
from .config import settings
from .dataset import describe, load_csv, write_csv
from .errors import BadSpecError, ParseError, ResampleLabError
from .nnet import TrainConfig
from .nus import THRESHOLD_MODES, NusConfig

log = logging.getLogger("resamplelab")


def _csv_list(v: str) -> list[str]:
    """Comma/semicolon separated names, de-duplicated, order kept."""
    parts = [p.strip() for p in (v or "").replace(";", ",").split(",")]
    seen = set()
    out = []
    for p in parts:
        if p and p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _floats(v: str, what: str) -> list[float]:
    try:
        return [float(p) for p in v.split(",") if p.strip()]
    except ValueError:
        raise ParseError(f"{what}: expected comma-separated numbers, got {v!r}") from None


def _blob_spec(args: argparse.Namespace) -> BlobSpec:
    if args.preset:
        base = PRESETS[args.preset]
        return BlobSpec(base.majority, base.minority, seed=args.seed)
    if not (args.centers and args.stds and args.counts):
        raise BadSpecError("give --preset or all of --centers, --stds and --counts")

    centers = [_floats(c, "--centers") for c in args.centers.split(";") if c.strip()]
    stds = _floats(args.stds, "--stds")
    try:
        counts = [int(c) for c in args.counts.split(",") if c.strip()]
    except ValueError:
        raise ParseError(f"--counts: expected comma-separated integers, got {args.counts!r}") from None
    if not len(centers) == len(stds) == len(counts) == 2:
        raise BadSpecError("exactly two classes are needed: majority first, then minority")

    classes = [BlobClass(tuple(c), s, n) for c, s, n in zip(centers, stds, counts)]
    return BlobSpec(classes[0], classes[1], seed=args.seed)


def _nus_config(args: argparse.Namespace) -> NusConfig:
    return NusConfig(
        threshold=args.nn_threshold,
        threshold_mode=args.threshold_mode,
        train=TrainConfig(max_epochs=args.max_epochs),
    )


def cmd_generate(args: argparse.Namespace) -> int:
    d = generate_blobs(_blob_spec(args))
    write_csv(d, args.out)
    log.info("wrote %d rows to %s", d.n, args.out)
    return 0


def cmd_resample(args: argparse.Namespace) -> int:
    d = load_csv(args.input, args.label)
    result = resample_dataset(d, args.method, args.seed, _nus_config(args), k=args.k)

    write_csv(result.balanced, args.out)
    if args.scatter:
        emit_scatter(d, result, args.scatter)
    print(f"{args.method}: kept {result.majority_count} majority / {result.kept_minority.size} minority -> {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    d = load_csv(args.input, args.label)
    nus_config = _nus_config(args)
    samplers = {name: make_sampler(name, nus_config, k=args.k) for name in _csv_list(args.methods)}
    metrics = _csv_list(args.metrics)
    cv = CVConfig(folds=args.folds, repeats=args.repeats, seed=args.seed, resample_scope=args.scope)

    report = run_experiment(d, samplers, _csv_list(args.classifiers), metrics, cv, workers=args.workers)
    if args.report:
        write_report(report, args.report)
    for metric in metrics:
        print(format_table(report, metric))
        print()
    return 0


def cmd_describe(args: argparse.Namespace) -> int:
    s = describe(load_csv(args.input, args.label))
    print(f"{'Dataset':<16}{'#attribute':>12}{'#min':>8}{'#maj':>8}{'Ratio':>8}")
    print(f"{s.name:<16}{s.m:>12}{s.n_minority:>8}{s.n_majority:>8}{s.ratio:>8.2f}")
    return 0


def cmd_counts(args: argparse.Namespace) -> int:
    d = load_csv(args.input, args.label)
    counts = retained_counts(d, _csv_list(args.methods), seed=args.seed, nus_config=_nus_config(args), k=args.k)
    for name, count in counts.items():
        print(f"{name:<8}{count:>8}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return 0


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="input", required=True, help="CSV file with a header row")
    p.add_argument("--label", required=True, help="label column name or zero-based index")


def _add_sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold-mode", choices=THRESHOLD_MODES, default="or_both")
    p.add_argument("--nn-threshold", type=int, default=settings.nn_threshold)
    p.add_argument("--max-epochs", type=int, default=TrainConfig.max_epochs)
    p.add_argument("--k", type=int, default=3, help="neighbors for the k-NN based samplers")
    p.add_argument("--seed", type=int, default=settings.default_seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resamplelab", description="Undersampling toolkit for binary imbalanced data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a two-class Gaussian blob dataset")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--centers", help='class centers, majority first: "0,0;2,2"')
    p.add_argument("--stds", help="per-class standard deviations: 1.5,0.5")
    p.add_argument("--counts", help="per-class row counts: 1000,100")
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("resample", help="balance a dataset with one sampler")
    _add_data_args(p)
    p.add_argument("--method", choices=SAMPLER_NAMES[1:], required=True)
    _add_sampler_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--scatter", help="also write plot data (2-feature datasets only)")
    p.set_defaults(handler=cmd_resample)

    p = sub.add_parser("evaluate", help="cross-validated sampler x classifier benchmark")
    _add_data_args(p)
    p.add_argument("--methods", required=True, help="comma-separated sampler names")
    p.add_argument("--classifiers", default="knn,logreg,sgd")
    p.add_argument("--metrics", default="auc,gmean,f1")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--scope", choices=SCOPES, default="train_only")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", help="write the JSON report here")
    _add_sampler_args(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("describe", help="attribute count, class counts and imbalance ratio")
    _add_data_args(p)
    p.set_defaults(handler=cmd_describe)

    p = sub.add_parser("counts", help="majority rows kept by each method on the whole dataset")
    _add_data_args(p)
    p.add_argument("--methods", default=",".join(SAMPLER_NAMES[1:]))
    _add_sampler_args(p)
    p.set_defaults(handler=cmd_counts)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.log_level)
    try:
        return args.handler(args)
    except ResampleLabError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return ex.exit_code


if __name__ == "__main__":
    sys.exit(main())
