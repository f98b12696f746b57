from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    MissingValueError,
    NonBinaryError,
    ParseError,
    ShapeError,
    TooFewSamplesError,
)

log = logging.getLogger("resamplelab.dataset")

_MISSING_TOKENS = {"", "nan", "na", "n/a", "null", "none"}


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _label_order(values) -> list:
    # labels are opaque identifiers; order is by their text form
    return sorted(values, key=str)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with binary labels.

    `partial` marks resampled outputs that may have lost a class; it relaxes
    the two-label rule and nothing else.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    label_name: str = "class"
    name: str = "dataset"
    row_ids: np.ndarray | None = None
    partial: bool = False

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ShapeError(f"features must be a 2-D matrix, got {X.ndim}-D")
        if y.ndim != 1:
            raise ShapeError("labels must be a 1-D sequence")
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if X.shape[1] < 1:
            raise ShapeError("at least one feature column is required")

        names = tuple(str(v) for v in self.feature_names)
        if len(names) != X.shape[1]:
            raise ShapeError(f"{len(names)} feature names for {X.shape[1]} columns")

        if not np.all(np.isfinite(X)):
            row = int(np.argwhere(~np.isfinite(X))[0][0])
            raise MissingValueError(f"non-finite feature value in row {row}")

        distinct = len(np.unique(y)) if y.size else 0
        if self.partial:
            if distinct > 2:
                raise NonBinaryError(f"expected at most 2 labels, found {distinct}")
        elif distinct != 2:
            raise NonBinaryError(f"expected exactly 2 distinct labels, found {distinct}")

        ids = np.arange(X.shape[0]) if self.row_ids is None else np.asarray(self.row_ids, dtype=int)
        if ids.shape != (X.shape[0],):
            raise ShapeError("row_ids must have one entry per row")

        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "labels", _readonly(y))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", _readonly(ids))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def m(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> dict:
        values, counts = np.unique(self.labels, return_counts=True)
        return {v.item() if hasattr(v, "item") else v: int(c) for v, c in zip(values, counts)}

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        labels = self.labels[idx]
        return Dataset(
            features=self.features[idx],
            labels=labels,
            feature_names=self.feature_names,
            label_name=self.label_name,
            name=self.name,
            row_ids=self.row_ids[idx],
            partial=len(np.unique(labels)) != 2,
        )

    def with_features(self, X: np.ndarray) -> "Dataset":
        return Dataset(
            features=X,
            labels=self.labels,
            feature_names=self.feature_names,
            label_name=self.label_name,
            name=self.name,
            row_ids=self.row_ids,
            partial=self.partial,
        )


@dataclass(frozen=True, eq=False)
class ClassSplit:
    minority_indices: np.ndarray
    majority_indices: np.ndarray
    minority_label: object
    majority_label: object

    @property
    def n_minority(self) -> int:
        return int(self.minority_indices.size)

    @property
    def n_majority(self) -> int:
        return int(self.majority_indices.size)


@dataclass(frozen=True, eq=False)
class ScalerParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.minimum, dtype=float)
        hi = np.asarray(self.maximum, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ShapeError("scaler minimum and maximum must be equal-length vectors")
        if np.any(hi < lo):
            raise ConfigError("scaler maximum below minimum")
        object.__setattr__(self, "minimum", _readonly(lo))
        object.__setattr__(self, "maximum", _readonly(hi))

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.minimum.size:
            raise ShapeError(f"expected {self.minimum.size} columns, got shape {X.shape}")
        return X

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Affine map onto the fitted range; no clamping, constant columns become 0."""
        X = self._check(X)
        span = self.span
        constant = span == 0
        out = (X - self.minimum) / np.where(constant, 1.0, span)
        out[:, constant] = 0.0
        return out

    def invert(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        return X * self.span + self.minimum


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    repeats: int
    assignments: np.ndarray  # (repeats, n) fold id per row
    seed: int

    def split(self, repeat: int, fold: int) -> tuple[np.ndarray, np.ndarray]:
        row = self.assignments[repeat]
        return np.flatnonzero(row != fold), np.flatnonzero(row == fold)


@dataclass(frozen=True)
class DatasetSummary:
    name: str
    m: int
    n_minority: int
    n_majority: int
    ratio: float


def split_classes(d: Dataset) -> ClassSplit:
    values, counts = np.unique(d.labels, return_counts=True)
    if len(values) != 2:
        raise NonBinaryError(f"expected exactly 2 distinct labels, found {len(values)}")

    count_of = {v: int(c) for v, c in zip(values.tolist(), counts)}
    first, second = _label_order(count_of)
    if count_of[second] < count_of[first]:
        minority, majority = second, first
    else:
        minority, majority = first, second

    labels = d.labels.tolist()
    mask = np.array([v == minority for v in labels], dtype=bool)
    return ClassSplit(
        minority_indices=_readonly(np.flatnonzero(mask)),
        majority_indices=_readonly(np.flatnonzero(~mask)),
        minority_label=minority,
        majority_label=majority,
    )


def describe(d: Dataset) -> DatasetSummary:
    split = split_classes(d)
    return DatasetSummary(
        name=d.name,
        m=d.m,
        n_minority=split.n_minority,
        n_majority=split.n_majority,
        ratio=round(split.n_majority / split.n_minority, 2),
    )


def fit_minmax(X: np.ndarray) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    return ScalerParams(minimum=X.min(axis=0), maximum=X.max(axis=0))


def fit_apply_minmax(d: Dataset) -> tuple[Dataset, ScalerParams]:
    params = fit_minmax(d.features)
    return d.with_features(params.apply(d.features)), params


def stratified_folds(d: Dataset, k: int, repeats: int, seed: int) -> FoldPlan:
    """Assign every row a fold id per repeat, class by class.

    Rows of each class are shuffled and dealt round-robin; the deal continues
    from where the previous class stopped so fold sizes stay level too.
    """
    if k < 2:
        raise ConfigError(f"fold count must be >= 2, got {k}")
    if repeats < 1:
        raise ConfigError(f"repeat count must be >= 1, got {repeats}")

    split = split_classes(d)
    for label, count in ((split.minority_label, split.n_minority), (split.majority_label, split.n_majority)):
        if count < k:
            raise TooFewSamplesError(f"class {label!r} has {count} rows, fewer than {k} folds")

    rng = np.random.default_rng(seed)
    assignments = np.empty((repeats, d.n), dtype=int)
    for r in range(repeats):
        offset = 0
        for members in (split.minority_indices, split.majority_indices):
            shuffled = rng.permutation(members)
            assignments[r, shuffled] = (offset + np.arange(shuffled.size)) % k
            offset = (offset + shuffled.size) % k

    return FoldPlan(k=k, repeats=repeats, assignments=_readonly(assignments), seed=seed)


# ------------------------------------------------
# CSV
# ------------------------------------------------
def _resolve_label_column(columns: Sequence[str], label_column: str | int) -> str:
    if isinstance(label_column, str):
        if label_column in columns:
            return label_column
        text = label_column.strip()
        if not text.lstrip("-").isdigit():
            raise ParseError(f"label column {label_column!r} not found in header")
        label_column = int(text)
    try:
        return columns[label_column]
    except IndexError:
        raise ParseError(f"label column index {label_column} out of range ({len(columns)} columns)") from None


def load_csv(path: str | Path, label_column: str | int) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as ex:
        raise ParseError(f"could not read {path}: {ex}") from ex

    columns = list(frame.columns)
    label_name = _resolve_label_column(columns, label_column)
    feature_names = [c for c in columns if c != label_name]
    if not feature_names:
        raise ShapeError("no feature columns besides the label")

    # labels are opaque: only an empty cell counts as missing
    labels = frame[label_name]
    empty_label = labels == ""
    if empty_label.any():
        line = int(np.flatnonzero(empty_label.to_numpy())[0]) + 2
        raise MissingValueError(f"missing label at line {line}")

    X = np.empty((len(frame), len(feature_names)), dtype=float)
    for j, col in enumerate(feature_names):
        raw = frame[col].str.strip()
        missing = raw.str.lower().isin(_MISSING_TOKENS)
        if missing.any():
            line = int(np.flatnonzero(missing.to_numpy())[0]) + 2
            raise MissingValueError(f"missing value in column {col!r} at line {line}")
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna()
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(f"non-numeric value {raw.iloc[i]!r} in column {col!r} at line {i + 2}")
        X[:, j] = values.to_numpy(dtype=float)

    d = Dataset(
        features=X,
        labels=labels.to_numpy(dtype=object),
        feature_names=tuple(feature_names),
        label_name=label_name,
        name=path.stem,
    )
    log.info("loaded %s: n=%d m=%d classes=%s", path.name, d.n, d.m, d.class_counts())
    return d


def write_csv(d: Dataset, path: str | Path) -> None:
    frame = pd.DataFrame(np.asarray(d.features), columns=list(d.feature_names))
    frame[d.label_name] = list(d.labels)
    frame.to_csv(path, index=False)
