import os
import tempfile
from pathlib import Path

# app.config reads the environment at import time
_TMP = tempfile.mkdtemp(prefix="resamplelab-tests-")
os.environ["DATABASE_URL"] = f"sqlite:///{_TMP}/runs.db"
os.environ["MINIO_ENDPOINT"] = ""
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from app.bench import BlobClass, BlobSpec, generate_blobs
from app.dataset import Dataset, write_csv
from app.nnet import NetworkSpec, TrainedReconstructor


def make_1d(majority, minority, maj_label="maj", min_label="min") -> Dataset:
    """1-feature dataset, majority rows first."""
    values = list(majority) + list(minority)
    labels = [maj_label] * len(majority) + [min_label] * len(minority)
    return Dataset(
        features=np.asarray(values, dtype=float).reshape(-1, 1),
        labels=np.asarray(labels, dtype=object),
        feature_names=("x",),
    )


def zero_network(m: int = 1, bias: float = 0.0) -> TrainedReconstructor:
    """Reconstructs every row as the constant `bias` vector."""
    return TrainedReconstructor(
        spec=NetworkSpec((m, m)),
        weights=(np.zeros((m, m)),),
        biases=(np.full(m, bias),),
    )


def identity_network(m: int) -> TrainedReconstructor:
    return TrainedReconstructor(spec=NetworkSpec((m, m)), weights=(np.eye(m),), biases=(np.zeros(m),))


@pytest.fixture
def far_blobs() -> Dataset:
    spec = BlobSpec(BlobClass((0.0, 0.0), 0.3, 60), BlobClass((9.0, 9.0), 0.3, 20), seed=3)
    return generate_blobs(spec)


@pytest.fixture
def far_blobs_csv(far_blobs, tmp_path) -> Path:
    path = tmp_path / "blobs.csv"
    write_csv(far_blobs, path)
    return path


@pytest.fixture
def tiny_minority_csv(tmp_path) -> Path:
    # two minority rows: too few for 5-fold CV
    path = tmp_path / "tiny.csv"
    rows = ["a,b,y"] + [f"{i},{i * 0.5},0" for i in range(10)] + ["20,20,1", "21,21,1"]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def uci_path(name: str) -> Path:
    """Path to a UCI CSV under RESAMPLELAB_DATA_DIR, or skip the test."""
    root = os.getenv("RESAMPLELAB_DATA_DIR")
    if not root:
        pytest.skip("RESAMPLELAB_DATA_DIR not set")
    path = Path(root) / f"{name}.csv"
    if not path.is_file():
        pytest.skip(f"{path} missing")
    return path
