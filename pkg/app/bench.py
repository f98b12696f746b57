from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .baselines import all_knn, cluster_centroids, enn, ncr, near_miss, random_undersample, tomek_links
from .classifiers import KNNConfig, LogRegConfig, SGDConfig, fit, predict, score
from .dataset import Dataset, fit_apply_minmax, fit_minmax, split_classes, stratified_folds
from .errors import (
    AllFoldsSkippedError,
    BadKError,
    BadSpecError,
    ConfigError,
    DegenerateDataError,
    NotTwoDimensionalError,
)
from .metrics import METRICS, compute_metric
from .nus import NusConfig, ResampleOutcome, build_outcome, nus1, nus2

log = logging.getLogger("resamplelab.bench")

Sampler = Callable[[Dataset, int], ResampleOutcome]

SAMPLER_NAMES = ("none", "nus1", "nus2", "rus", "nm1", "nm2", "nm3", "tomek", "enn", "aknn", "ncr", "cc")
SCOPES = ("train_only", "whole_dataset")


# ------------------------------------------------
# Synthetic blobs
# ------------------------------------------------
@dataclass(frozen=True)
class BlobClass:
    center: tuple[float, ...]
    std: float
    count: int


@dataclass(frozen=True)
class BlobSpec:
    """Two isotropic Gaussian classes; the first is the majority."""

    majority: BlobClass
    minority: BlobClass
    seed: int = 0

    def __post_init__(self):
        for role, c in (("majority", self.majority), ("minority", self.minority)):
            if c.count < 1:
                raise BadSpecError(f"{role} count must be >= 1, got {c.count}")
            if c.std < 0:
                raise BadSpecError(f"{role} std must be >= 0, got {c.std}")
            if len(c.center) < 2:
                raise BadSpecError(f"{role} center needs at least 2 coordinates")
        if len(self.majority.center) != len(self.minority.center):
            raise BadSpecError("class centers have different dimensions")


DATASET_A = BlobSpec(BlobClass((0.0, 0.0), 1.5, 1000), BlobClass((2.0, 2.0), 0.5, 100))
DATASET_B = BlobSpec(BlobClass((0.0, 0.0), 1.5, 1000), BlobClass((0.02, 0.05), 1.5, 300))
CASE_STUDY = BlobSpec(BlobClass((0.0, 0.0), 2.5, 500), BlobClass((5.0, 5.0), 5.5, 50))

PRESETS = {"a": DATASET_A, "b": DATASET_B, "case": CASE_STUDY}


def generate_blobs(spec: BlobSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    blocks = []
    for c in (spec.majority, spec.minority):
        center = np.asarray(c.center, dtype=float)
        blocks.append(center + c.std * rng.standard_normal((c.count, center.size)))
    dims = len(spec.majority.center)
    return Dataset(
        features=np.vstack(blocks),
        labels=np.array(["maj"] * spec.majority.count + ["min"] * spec.minority.count, dtype=object),
        feature_names=tuple(f"x{i + 1}" for i in range(dims)),
        label_name="class",
        name="blobs",
    )


# ------------------------------------------------
# Samplers and classifiers by name
# ------------------------------------------------
def _identity(d: Dataset, seed: int) -> ResampleOutcome:
    split = split_classes(d)
    return build_outcome("none", d, split, split.majority_indices)


def make_sampler(name: str, nus_config: NusConfig | None = None, k: int = 3) -> Sampler:
    nus_config = nus_config or NusConfig()
    table: dict[str, Sampler] = {
        "none": _identity,
        "nus1": lambda d, seed: nus1(d, nus_config, seed),
        "nus2": lambda d, seed: nus2(d, nus_config, seed),
        "rus": lambda d, seed: random_undersample(d, seed),
        "nm1": lambda d, seed: near_miss(d, 1, k),
        "nm2": lambda d, seed: near_miss(d, 2, k),
        "nm3": lambda d, seed: near_miss(d, 3, k),
        "tomek": lambda d, seed: tomek_links(d),
        "enn": lambda d, seed: enn(d, k),
        "aknn": lambda d, seed: all_knn(d, k),
        "ncr": lambda d, seed: ncr(d, k),
        "cc": lambda d, seed: cluster_centroids(d, seed),
    }
    try:
        return table[name]
    except KeyError:
        raise ConfigError(f"unknown sampler {name!r}; expected one of {SAMPLER_NAMES}") from None


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    cfg: object = None


_CLASSIFIERS = {
    "knn": ClassifierSpec("knn", KNNConfig()),
    "logreg": ClassifierSpec("logreg", LogRegConfig()),
    "sgd": ClassifierSpec("sgd_hinge", SGDConfig()),
}


def make_classifier(name: str) -> ClassifierSpec:
    try:
        return _CLASSIFIERS["sgd" if name == "sgd_hinge" else name]
    except KeyError:
        raise ConfigError(f"unknown classifier {name!r}; expected one of {tuple(_CLASSIFIERS)}") from None


# ------------------------------------------------
# Experiment harness
# ------------------------------------------------
@dataclass(frozen=True)
class CVConfig:
    folds: int = 5
    repeats: int = 10
    seed: int = 0
    resample_scope: str = "train_only"

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.resample_scope not in SCOPES:
            raise ConfigError(f"resample_scope must be one of {SCOPES}, got {self.resample_scope!r}")


@dataclass(frozen=True)
class ReportRow:
    sampler: str
    classifier: str
    metric: str
    mean: float | None
    std: float | None
    fold_values: tuple[float | None, ...]


@dataclass(frozen=True)
class SkippedCell:
    sampler: str
    classifier: str
    repeat: int
    fold: int
    reason: str


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    rows: tuple[ReportRow, ...]
    skipped: tuple[SkippedCell, ...]
    provenance: Mapping[str, object] = field(default_factory=dict)

    def row(self, sampler: str, classifier: str, metric: str) -> ReportRow:
        for r in self.rows:
            if (r.sampler, r.classifier, r.metric) == (sampler, classifier, metric):
                return r
        raise KeyError((sampler, classifier, metric))

    def to_dict(self) -> dict:
        return {
            "provenance": dict(self.provenance),
            "rows": [
                {
                    "sampler": r.sampler,
                    "classifier": r.classifier,
                    "metric": r.metric,
                    "mean": r.mean,
                    "std": r.std,
                    "fold_values": list(r.fold_values),
                }
                for r in self.rows
            ],
            "skipped": [
                {"sampler": s.sampler, "classifier": s.classifier, "repeat": s.repeat, "fold": s.fold, "reason": s.reason}
                for s in self.skipped
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperimentReport":
        rows = tuple(
            ReportRow(
                sampler=r["sampler"],
                classifier=r["classifier"],
                metric=r["metric"],
                mean=r["mean"],
                std=r["std"],
                fold_values=tuple(r["fold_values"]),
            )
            for r in doc.get("rows", [])
        )
        skipped = tuple(SkippedCell(**s) for s in doc.get("skipped", []))
        return cls(rows=rows, skipped=skipped, provenance=dict(doc.get("provenance", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def derive_seed(seed: int, *parts: int) -> int:
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1)[0])


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    mean = float(np.mean(present))
    std = float(np.std(present, ddof=1)) if len(present) > 1 else 0.0
    return mean, std


@dataclass
class _CellResult:
    values: list[tuple[str, str, str, int, float]] = field(default_factory=list)
    skipped: list[SkippedCell] = field(default_factory=list)


def _evaluate(train: Dataset, X_test, y_test, positive, sname, classifiers, metrics, seed, pos, repeat, fold, out: _CellResult):
    if train.partial:
        for cname in classifiers:
            out.skipped.append(SkippedCell(sname, cname, repeat, fold, "resampled training set has a single class"))
        return
    for cname, cspec in classifiers.items():
        model = fit(cspec.kind, train.features, train.labels, cspec.cfg, seed=seed, positive=positive)
        s = score(model, X_test)
        pred = predict(model, X_test)
        for metric in metrics:
            out.values.append((sname, cname, metric, pos, compute_metric(metric, y_test, pred, s, positive)))


def _resample(sampler: Sampler, d: Dataset, seed: int) -> tuple[ResampleOutcome | None, str]:
    try:
        return sampler(d, seed), ""
    except (DegenerateDataError, BadKError) as ex:
        return None, f"{type(ex).__name__}: {ex}"


def _train_only_cell(d, plan, repeat, fold, samplers, classifiers, metrics, positive, cv) -> _CellResult:
    out = _CellResult()
    train_idx, test_idx = plan.split(repeat, fold)
    seed = derive_seed(cv.seed, repeat, fold)
    pos = repeat * cv.folds + fold

    params = fit_minmax(d.features[train_idx])
    train = d.subset(train_idx).with_features(params.apply(d.features[train_idx]))
    X_test = params.apply(d.features[test_idx])
    y_test = d.labels[test_idx]

    for sname, sampler in samplers.items():
        outcome, reason = _resample(sampler, train, seed)
        if outcome is None:
            for cname in classifiers:
                out.skipped.append(SkippedCell(sname, cname, repeat, fold, reason))
            continue
        _evaluate(outcome.balanced, X_test, y_test, positive, sname, classifiers, metrics, seed, pos, repeat, fold, out)
    return out


def _whole_dataset_repeat(scaled, repeat, samplers, classifiers, metrics, positive, cv) -> _CellResult:
    # resample first, then cross-validate inside the resampled data
    out = _CellResult()
    seed = derive_seed(cv.seed, repeat)
    for sname, sampler in samplers.items():
        outcome, reason = _resample(sampler, scaled, seed)
        balanced = None if outcome is None else outcome.balanced
        if balanced is not None and not balanced.partial:
            try:
                plan = stratified_folds(balanced, cv.folds, 1, seed)
            except DegenerateDataError as ex:
                reason = f"{type(ex).__name__}: {ex}"
                balanced = None
        elif balanced is not None:
            reason = "resampled data has a single class"
            balanced = None
        if balanced is None:
            for fold in range(cv.folds):
                for cname in classifiers:
                    out.skipped.append(SkippedCell(sname, cname, repeat, fold, reason))
            continue
        for fold in range(cv.folds):
            train_idx, test_idx = plan.split(0, fold)
            _evaluate(
                balanced.subset(train_idx), balanced.features[test_idx], balanced.labels[test_idx], positive,
                sname, classifiers, metrics, derive_seed(cv.seed, repeat, fold), repeat * cv.folds + fold, repeat, fold, out,
            )
    return out


def run_experiment(
    d: Dataset,
    samplers: Mapping[str, Sampler],
    classifiers: Mapping[str, ClassifierSpec] | Sequence[str],
    metrics: Sequence[str],
    cv: CVConfig,
    workers: int = 1,
) -> ExperimentReport:
    """Cross-validated sampler x classifier x metric benchmark.

    train_only: every (repeat, fold) cell is scaled and resampled from its
    training rows alone; the held-out fold is only ever scored.
    whole_dataset: each repeat resamples the whole (scaled) dataset once and
    cross-validates on the result.
    """
    if not isinstance(classifiers, Mapping):
        classifiers = {name: make_classifier(name) for name in classifiers}
    for metric in metrics:
        if metric not in METRICS:
            raise ConfigError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if not samplers or not classifiers or not metrics:
        raise ConfigError("need at least one sampler, classifier and metric")

    split = split_classes(d)
    positive = split.minority_label
    cells = cv.folds * cv.repeats

    if cv.resample_scope == "train_only":
        plan = stratified_folds(d, cv.folds, cv.repeats, cv.seed)
        jobs = [
            (lambda r=r, f=f: _train_only_cell(d, plan, r, f, samplers, classifiers, metrics, positive, cv))
            for r in range(cv.repeats) for f in range(cv.folds)
        ]
    else:
        scaled, _ = fit_apply_minmax(d)
        jobs = [
            (lambda r=r: _whole_dataset_repeat(scaled, r, samplers, classifiers, metrics, positive, cv))
            for r in range(cv.repeats)
        ]

    log.info(
        "experiment on %s: %d samplers x %d classifiers x %d metrics, %d folds x %d repeats (%s)",
        d.name, len(samplers), len(classifiers), len(metrics), cv.folds, cv.repeats, cv.resample_scope,
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: job(), jobs))
    else:
        results = [job() for job in jobs]

    table: dict[tuple[str, str, str], list[float | None]] = {
        (s, c, m): [None] * cells for s in samplers for c in classifiers for m in metrics
    }
    skipped: list[SkippedCell] = []
    for res in results:
        for sname, cname, metric, pos, value in res.values:
            table[(sname, cname, metric)][pos] = float(value)
        skipped.extend(res.skipped)

    rows = []
    for key in sorted(table):
        mean, std = _aggregate(table[key])
        if mean is None:
            log.warning("no evaluated folds for %s/%s/%s", *key)
        rows.append(ReportRow(*key, mean=mean, std=std, fold_values=tuple(table[key])))
    if all(r.mean is None for r in rows):
        raise AllFoldsSkippedError("every fold was skipped; nothing to report")
    if skipped:
        log.warning("%d sampler/classifier folds skipped", len(skipped))

    skipped.sort(key=lambda s: (s.sampler, s.classifier, s.repeat, s.fold))
    provenance = {
        "dataset": d.name,
        "n": d.n,
        "m": d.m,
        "n_minority": split.n_minority,
        "n_majority": split.n_majority,
        "minority_label": str(positive),
        "cv": {"folds": cv.folds, "repeats": cv.repeats, "seed": cv.seed, "resample_scope": cv.resample_scope},
        "samplers": list(samplers),
        "classifiers": list(classifiers),
        "metrics": list(metrics),
        "seed_derivation": "SeedSequence([seed, repeat, fold])",
        "toolkit_version": __version__,
    }
    return ExperimentReport(rows=tuple(rows), skipped=tuple(skipped), provenance=provenance)


def write_report(report: ExperimentReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")


def metric_grid(report: ExperimentReport, metric: str) -> tuple[list[str], list[tuple[str, list[str]]]]:
    """Classifier names and one (sampler, `mean ± std` cells) line per sampler."""
    samplers = report.provenance.get("samplers") or sorted({r.sampler for r in report.rows})
    classifiers = report.provenance.get("classifiers") or sorted({r.classifier for r in report.rows})
    cells = {(r.sampler, r.classifier): r for r in report.rows if r.metric == metric}

    lines = []
    for s in samplers:
        row = []
        for c in classifiers:
            r = cells.get((s, c))
            row.append("n/a" if r is None or r.mean is None else f"{r.mean:.3f} ± {r.std:.3f}")
        lines.append((s, row))
    return list(classifiers), lines


def format_table(report: ExperimentReport, metric: str) -> str:
    """Samplers down, classifiers across."""
    classifiers, grid = metric_grid(report, metric)
    header = ["Method", *classifiers]
    lines = [header] + [[s, *cells] for s, cells in grid]

    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    text = [f"{metric.upper()} ({report.provenance.get('dataset', '')})"]
    for row in lines:
        text.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(text)


def resample_dataset(d: Dataset, method: str, seed: int = 0, nus_config: NusConfig | None = None, k: int = 3) -> ResampleOutcome:
    """Scale, resample, and hand back the outcome in the dataset's own units."""
    scaled, params = fit_apply_minmax(d)
    outcome = make_sampler(method, nus_config, k)(scaled, seed)
    synthesized = outcome.synthesized_majority
    if synthesized is not None:
        synthesized = params.invert(synthesized)
    return build_outcome(outcome.sampler, d, split_classes(d), outcome.kept_majority, synthesized, outcome.notes)


def retained_counts(d: Dataset, methods: Sequence[str], seed: int = 0, nus_config: NusConfig | None = None, k: int = 3) -> dict[str, int]:
    """Majority rows (or points) each method keeps on the whole scaled dataset."""
    scaled, _ = fit_apply_minmax(d)
    counts = {}
    for name in methods:
        counts[name] = make_sampler(name, nus_config, k)(scaled, seed).majority_count
    return counts


# ------------------------------------------------
# Scatter data
# ------------------------------------------------
def emit_scatter(original: Dataset, outcome: ResampleOutcome, path: str | Path) -> None:
    """Plot-ready CSV: x, y, class, kept, synthetic per original row, then synthesized points."""
    if original.m != 2:
        raise NotTwoDimensionalError(f"scatter output needs exactly 2 features, dataset has {original.m}")

    kept = np.zeros(original.n, dtype=int)
    kept[outcome.kept_minority] = 1
    kept[outcome.kept_majority] = 1
    frame = pd.DataFrame({
        "x": original.features[:, 0],
        "y": original.features[:, 1],
        "class": list(original.labels),
        "kept": kept,
        "synthetic": np.zeros(original.n, dtype=int),
    })

    if outcome.n_synthesized:
        pts = outcome.synthesized_majority
        label = outcome.balanced.labels[-1]
        frame = pd.concat([frame, pd.DataFrame({
            "x": pts[:, 0],
            "y": pts[:, 1],
            "class": [label] * pts.shape[0],
            "kept": np.ones(pts.shape[0], dtype=int),
            "synthetic": np.ones(pts.shape[0], dtype=int),
        })], ignore_index=True)

    frame.to_csv(path, index=False)
