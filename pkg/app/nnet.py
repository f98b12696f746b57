from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyInputError, ShapeError

log = logging.getLogger("resamplelab.nnet")

MODEL_FORMAT = "resamplelab.reconstructor/1"

KINDS = ("feedforward", "autoencoder")
HIDDEN_ACTIVATIONS = ("tanh", "relu")


def _tanh_grad(a: np.ndarray) -> np.ndarray:
    return 1.0 - a * a


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _relu_grad(a: np.ndarray) -> np.ndarray:
    return (a > 0.0).astype(float)


# activation -> (function, derivative expressed through the activation's output)
_ACTIVATIONS = {
    "tanh": (np.tanh, _tanh_grad),
    "relu": (_relu, _relu_grad),
}


@dataclass(frozen=True)
class NetworkSpec:
    layer_sizes: tuple[int, ...]
    kind: str = "feedforward"
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ConfigError("a network needs at least an input and an output layer")
        if any(s < 1 for s in sizes):
            raise ConfigError(f"layer sizes must be positive: {sizes}")
        if sizes[0] != sizes[-1]:
            raise ConfigError(f"input size {sizes[0]} differs from output size {sizes[-1]}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown network kind {self.kind!r}")
        if self.kind == "autoencoder" and (len(sizes) < 3 or sizes[len(sizes) // 2] >= sizes[0]):
            raise ConfigError(f"autoencoder needs a bottleneck smaller than {sizes[0]}: {sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation != "identity":
            raise ConfigError("only the identity output activation is supported")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 2000
    target_mse: float = 1e-3
    learning_rate: float = 0.05
    batch_size: int | None = None  # None -> min(32, n)
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not self.target_mse > 0:
            raise ConfigError(f"target_mse must be > 0, got {self.target_mse}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True, eq=False)
class TrainedReconstructor:
    spec: NetworkSpec
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    final_training_mse: float = 0.0
    loss_history: tuple[float, ...] = field(default=())

    def __post_init__(self):
        sizes = self.spec.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError(f"expected {len(sizes) - 1} weight layers for sizes {sizes}")
        ws, bs = [], []
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            W = np.array(W, dtype=float)
            b = np.array(b, dtype=float)
            if W.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ShapeError(f"layer {i}: weights {W.shape} / bias {b.shape} do not fit sizes {sizes}")
            W.setflags(write=False)
            b.setflags(write=False)
            ws.append(W)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))
        object.__setattr__(self, "loss_history", tuple(float(v) for v in self.loss_history))

    @property
    def m(self) -> int:
        return self.spec.input_size

    @property
    def epochs_run(self) -> int:
        return len(self.loss_history)


@dataclass(frozen=True)
class DistanceRecord:
    index: int
    dist: float


def choose_architecture(m: int, threshold: int = 30, hidden_activation: str = "tanh") -> NetworkSpec:
    """Pick the reconstruction network for `m` attributes.

    More than `threshold` attributes -> autoencoder [m, 3m/4, m/2, 3m/4, m]
    (ceilings); otherwise a plain feedforward net with two 5-unit hidden layers.
    """
    if m < 1:
        raise ConfigError(f"attribute count must be >= 1, got {m}")
    if m > threshold:
        outer = math.ceil(0.75 * m)
        inner = math.ceil(0.5 * m)
        return NetworkSpec((m, outer, inner, outer, m), kind="autoencoder", hidden_activation=hidden_activation)
    return NetworkSpec((m, 5, 5, m), kind="feedforward", hidden_activation=hidden_activation)


def init_parameters(spec: NetworkSpec, rng: np.random.Generator) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X: np.ndarray, spec: NetworkSpec) -> list[np.ndarray]:
    """Activations of every layer, input first and reconstruction last."""
    act, _ = _ACTIVATIONS[spec.hidden_activation]
    acts = [X]
    h = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        h = z if i == last else act(z)
        acts.append(h)
    return acts


def mse_and_gradients(weights, biases, X: np.ndarray, spec: NetworkSpec):
    """Mean squared reconstruction error over all entries of X, with its parameter gradients."""
    _, act_grad = _ACTIVATIONS[spec.hidden_activation]
    acts = forward(weights, biases, X, spec)
    diff = acts[-1] - X
    mse = float(np.mean(diff * diff))

    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = 2.0 * diff / diff.size
    for i in range(len(weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * act_grad(acts[i])
    return mse, grad_w, grad_b


def _check_matrix(X, m: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m:
        raise ShapeError(f"expected an n x {m} matrix, got shape {X.shape}")
    return X


def train_reconstructor(minority: np.ndarray, spec: NetworkSpec, cfg: TrainConfig) -> TrainedReconstructor:
    """Fit `spec` to reproduce the minority rows with plain mini-batch gradient descent.

    No validation split and no regularization: the network is meant to overfit.
    Stops once the full-batch MSE reaches cfg.target_mse or after cfg.max_epochs.
    """
    if not isinstance(cfg, TrainConfig):
        raise ConfigError("cfg must be a TrainConfig")
    X = _check_matrix(minority, spec.input_size)
    n = X.shape[0]
    if n < 1:
        raise EmptyInputError("cannot train on zero minority rows")

    rng = np.random.default_rng(cfg.seed)
    weights, biases = init_parameters(spec, rng)
    batch = min(cfg.batch_size or min(32, n), n)
    lr = cfg.learning_rate

    history = []
    mse = float("inf")
    for _ in range(cfg.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            rows = X[order[start:start + batch]]
            _, grad_w, grad_b = mse_and_gradients(weights, biases, rows, spec)
            for i in range(len(weights)):
                weights[i] = weights[i] - lr * grad_w[i]
                biases[i] = biases[i] - lr * grad_b[i]
        diff = forward(weights, biases, X, spec)[-1] - X
        mse = float(np.mean(diff * diff))
        history.append(mse)
        if mse <= cfg.target_mse:
            break

    if mse > cfg.target_mse:
        log.warning("reconstructor stopped at max_epochs=%d with mse=%.6g (target %.3g)", cfg.max_epochs, mse, cfg.target_mse)
    log.info("trained %s %s on %d rows: epochs=%d mse=%.6g", spec.kind, list(spec.layer_sizes), n, len(history), mse)

    return TrainedReconstructor(
        spec=spec,
        weights=tuple(weights),
        biases=tuple(biases),
        final_training_mse=mse,
        loss_history=tuple(history),
    )


def reconstruct_batch(model: TrainedReconstructor, X: np.ndarray) -> np.ndarray:
    X = _check_matrix(X, model.m)
    return forward(model.weights, model.biases, X, model.spec)[-1]


def reconstruct(model: TrainedReconstructor, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != model.m:
        raise ShapeError(f"expected a length-{model.m} vector, got shape {x.shape}")
    return reconstruct_batch(model, x[None, :])[0]


def reconstruction_distances(model: TrainedReconstructor, rows, data: np.ndarray) -> list[DistanceRecord]:
    """Squared reconstruction distance per row, largest first; ties by ascending index."""
    rows = np.asarray(rows, dtype=int).reshape(-1)
    if rows.size == 0:
        return []
    X = np.asarray(data, dtype=float)[rows]
    diff = X - reconstruct_batch(model, X)
    dist = np.sum(diff * diff, axis=1)
    order = np.lexsort((rows, -dist))
    return [DistanceRecord(index=int(rows[i]), dist=float(dist[i])) for i in order]


# ------------------------------------------------
# JSON model documents
# ------------------------------------------------
def model_to_dict(model: TrainedReconstructor) -> dict:
    return {
        "format": MODEL_FORMAT,
        "layer_sizes": list(model.spec.layer_sizes),
        "kind": model.spec.kind,
        "hidden_activation": model.spec.hidden_activation,
        "output_activation": model.spec.output_activation,
        # row-major (fan_in x fan_out) per layer
        "weights": [W.ravel(order="C").tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "final_training_mse": model.final_training_mse,
    }


def model_from_dict(doc: dict) -> TrainedReconstructor:
    if doc.get("format") != MODEL_FORMAT:
        raise ConfigError(f"unsupported model document format {doc.get('format')!r}")
    spec = NetworkSpec(
        layer_sizes=tuple(doc["layer_sizes"]),
        kind=doc["kind"],
        hidden_activation=doc["hidden_activation"],
        output_activation=doc["output_activation"],
    )
    sizes = spec.layer_sizes
    weights = []
    for i, flat in enumerate(doc["weights"]):
        W = np.asarray(flat, dtype=float)
        if W.size != sizes[i] * sizes[i + 1]:
            raise ShapeError(f"layer {i} holds {W.size} weights, expected {sizes[i] * sizes[i + 1]}")
        weights.append(W.reshape(sizes[i], sizes[i + 1]))
    return TrainedReconstructor(
        spec=spec,
        weights=tuple(weights),
        biases=tuple(np.asarray(b, dtype=float) for b in doc["biases"]),
        final_training_mse=float(doc.get("final_training_mse", 0.0)),
    )


def dump_model(model: TrainedReconstructor, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2), encoding="utf-8")


def load_model(path: str | Path) -> TrainedReconstructor:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
