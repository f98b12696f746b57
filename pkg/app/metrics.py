from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, EmptyInputError, LengthMismatchError, SingleClassError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def _ratio(num: float, den: float) -> float:
    # 0/0 -> 0
    return num / den if den else 0.0


def confusion_matrix(y_true, y_pred, positive) -> ConfusionMatrix:
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if not y_true:
        raise EmptyInputError("no samples to evaluate")
    actual = np.array([v == positive for v in y_true], dtype=bool)
    predicted = np.array([v == positive for v in y_pred], dtype=bool)
    return ConfusionMatrix(
        tp=int(np.sum(actual & predicted)),
        fn=int(np.sum(actual & ~predicted)),
        fp=int(np.sum(~actual & predicted)),
        tn=int(np.sum(~actual & ~predicted)),
    )


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    return precision, recall, _ratio(2 * precision * recall, precision + recall)


def gmean(cm: ConfusionMatrix, literal: bool = False) -> float:
    """sqrt(sensitivity * specificity).

    literal=True returns sqrt(TP * TN) over raw counts instead; that form is
    not bounded to [0, 1] and is only there for auditing.
    """
    if literal:
        return math.sqrt(cm.tp * cm.tn)
    return math.sqrt(_ratio(cm.tp, cm.tp + cm.fn) * _ratio(cm.tn, cm.tn + cm.fp))


def auc(y_true, scores, positive) -> float:
    """Mann-Whitney AUC from average ranks; tied scores count one half."""
    actual = np.array([v == positive for v in y_true], dtype=bool)
    s = np.asarray(scores, dtype=float)
    if actual.size != s.size:
        raise LengthMismatchError(f"{actual.size} labels vs {s.size} scores")
    n_pos = int(actual.sum())
    n_neg = actual.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("auc needs both classes present")
    ranks = rankdata(s, method="average")
    u = ranks[actual].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _precision(cm: ConfusionMatrix) -> float:
    return precision_recall_f1(cm)[0]


def _recall(cm: ConfusionMatrix) -> float:
    return precision_recall_f1(cm)[1]


def _f1(cm: ConfusionMatrix) -> float:
    return precision_recall_f1(cm)[2]


_FROM_CONFUSION = {
    "gmean": gmean,
    "f1": _f1,
    "precision": _precision,
    "recall": _recall,
}

METRICS = ("auc",) + tuple(_FROM_CONFUSION)


def compute_metric(name: str, y_true, y_pred, scores, positive) -> float:
    if name == "auc":
        return auc(y_true, scores, positive)
    try:
        fn = _FROM_CONFUSION[name]
    except KeyError:
        raise ConfigError(f"unknown metric {name!r}; expected one of {METRICS}") from None
    return fn(confusion_matrix(y_true, y_pred, positive))
