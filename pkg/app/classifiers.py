from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .baselines import NeighborQuery
from .errors import ConfigError, ShapeError, SingleClassError

log = logging.getLogger("resamplelab.classifiers")

KINDS = ("knn", "logreg", "sgd_hinge")


@dataclass(frozen=True)
class KNNConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"knn needs k >= 1, got {self.k}")


@dataclass(frozen=True)
class LogRegConfig:
    learning_rate: float = 0.1
    epochs: int = 500

    def __post_init__(self):
        if not self.learning_rate > 0 or self.epochs < 1:
            raise ConfigError("logreg needs learning_rate > 0 and epochs >= 1")


@dataclass(frozen=True)
class SGDConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    alpha: float = 1e-4  # L2 penalty

    def __post_init__(self):
        if not self.learning_rate > 0 or self.epochs < 1 or self.alpha < 0:
            raise ConfigError("sgd needs learning_rate > 0, epochs >= 1 and alpha >= 0")


_DEFAULT_CONFIGS = {"knn": KNNConfig, "logreg": LogRegConfig, "sgd_hinge": SGDConfig}


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """A fitted scorer; higher score means more likely the positive (minority) class."""

    kind: str
    positive_label: object
    negative_label: object
    # knn
    train_X: np.ndarray | None = None
    train_positive: np.ndarray | None = None
    k: int = 0
    # linear kinds
    weights: np.ndarray | None = None
    bias: float = 0.0

    @property
    def m(self) -> int:
        return int((self.train_X if self.kind == "knn" else self.weights).shape[-1])

    @property
    def threshold(self) -> float:
        return 0.5 if self.kind == "knn" else 0.0


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _fit_logreg(X: np.ndarray, target: np.ndarray, cfg: LogRegConfig) -> tuple[np.ndarray, float]:
    # full-batch gradient descent on the mean logistic loss, zero start
    w = np.zeros(X.shape[1])
    b = 0.0
    n = X.shape[0]
    for _ in range(cfg.epochs):
        err = _sigmoid(X @ w + b) - target
        w = w - cfg.learning_rate * (X.T @ err) / n
        b = b - cfg.learning_rate * float(err.sum()) / n
    return w, b


def _fit_sgd_hinge(X: np.ndarray, sign: np.ndarray, cfg: SGDConfig, seed: int) -> tuple[np.ndarray, float]:
    rng = np.random.default_rng(seed)
    w = np.zeros(X.shape[1])
    b = 0.0
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        for i in rng.permutation(X.shape[0]):
            w *= 1.0 - lr * cfg.alpha
            if sign[i] * (X[i] @ w + b) < 1.0:
                w += lr * sign[i] * X[i]
                b += lr * sign[i]
    return w, b


def _positive_of(y: np.ndarray, labels: list) -> object:
    counts = {v: int(np.sum(y == v)) for v in labels}
    first, second = sorted(labels, key=str)
    return second if counts[second] < counts[first] else first


def fit(kind: str, X, y, cfg=None, seed: int = 0, positive=None) -> ClassifierModel:
    """Fit one of the harness classifiers.

    `positive` defaults to the minority label of `y` (ties -> first label as text).
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")
    cfg = cfg if cfg is not None else _DEFAULT_CONFIGS[kind]()
    if not isinstance(cfg, _DEFAULT_CONFIGS[kind]):
        raise ConfigError(f"{kind} expects a {_DEFAULT_CONFIGS[kind].__name__}")

    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"features {X.shape} do not match {y.shape[0]} labels")
    labels = list(dict.fromkeys(y.tolist()))
    if len(labels) != 2:
        raise SingleClassError(f"training labels must contain 2 classes, found {len(labels)}")

    if positive is None:
        positive = _positive_of(y, labels)
    elif positive not in labels:
        raise ConfigError(f"positive label {positive!r} absent from training labels")
    negative = labels[1] if labels[0] == positive else labels[0]
    is_pos = np.array([v == positive for v in y.tolist()], dtype=bool)

    if kind == "knn":
        k = cfg.k
        if k > X.shape[0]:
            log.warning("knn k=%d capped to %d training rows", k, X.shape[0])
            k = X.shape[0]
        return ClassifierModel(kind, positive, negative, train_X=X.copy(), train_positive=is_pos, k=k)

    if kind == "logreg":
        w, b = _fit_logreg(X, is_pos.astype(float), cfg)
    else:
        w, b = _fit_sgd_hinge(X, np.where(is_pos, 1.0, -1.0), cfg, seed)
    return ClassifierModel(kind, positive, negative, weights=w, bias=float(b))


def score(model: ClassifierModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.m:
        raise ShapeError(f"expected an n x {model.m} matrix, got shape {X.shape}")
    if model.kind == "knn":
        nearest = NeighborQuery(model.train_X).kneighbors(X, model.k)
        return model.train_positive[nearest].mean(axis=1)
    return X @ model.weights + model.bias


def predict(model: ClassifierModel, X) -> np.ndarray:
    s = score(model, X)
    return np.where(s > model.threshold, model.positive_label, model.negative_label).astype(object)
