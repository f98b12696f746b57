from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .dataset import ClassSplit, Dataset, split_classes
from .errors import ConfigError, EmptyInputError, EmptySelectionWarning
from .nnet import (
    DistanceRecord,
    TrainConfig,
    TrainedReconstructor,
    choose_architecture,
    reconstruction_distances,
    train_reconstructor,
)

log = logging.getLogger("resamplelab.nus")

THRESHOLD_MODES = ("or_both", "max", "half_average")


@dataclass(frozen=True)
class NusConfig:
    threshold: int = 30
    threshold_mode: str = "or_both"
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.threshold < 1:
            raise ConfigError(f"architecture threshold must be >= 1, got {self.threshold}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ConfigError(f"threshold_mode must be one of {THRESHOLD_MODES}, got {self.threshold_mode!r}")


@dataclass(frozen=True)
class MinorityThresholds:
    max_dist: float
    last_mid_avg: float


@dataclass(frozen=True, eq=False)
class ResampleOutcome:
    """Rows a sampler kept, by index into the dataset it was given.

    `balanced` holds the kept rows in ascending index order followed by any
    synthesized majority points.
    """

    sampler: str
    kept_majority: np.ndarray
    kept_minority: np.ndarray
    balanced: Dataset
    synthesized_majority: np.ndarray | None = None
    notes: Mapping[str, object] = field(default_factory=dict)

    @property
    def n_synthesized(self) -> int:
        return 0 if self.synthesized_majority is None else int(self.synthesized_majority.shape[0])

    @property
    def majority_count(self) -> int:
        return int(self.kept_majority.size) + self.n_synthesized


def build_outcome(
    sampler: str,
    d: Dataset,
    split: ClassSplit,
    kept_majority,
    synthesized: np.ndarray | None = None,
    notes: Mapping[str, object] | None = None,
) -> ResampleOutcome:
    kept = np.unique(np.asarray(kept_majority, dtype=int))
    rows = np.sort(np.concatenate([split.minority_indices, kept]))
    balanced = d.subset(rows)

    if synthesized is not None:
        synthesized = np.asarray(synthesized, dtype=float)
        count = synthesized.shape[0]
        labels = np.concatenate([np.asarray(balanced.labels, dtype=object), np.full(count, split.majority_label, dtype=object)])
        balanced = Dataset(
            features=np.vstack([balanced.features, synthesized]),
            labels=labels,
            feature_names=d.feature_names,
            label_name=d.label_name,
            name=d.name,
            # synthesized points have no original row
            row_ids=np.concatenate([balanced.row_ids, np.full(count, -1)]),
            partial=len(set(labels.tolist())) != 2,
        )
        synthesized = synthesized.copy()
        synthesized.setflags(write=False)

    kept.setflags(write=False)
    log.info(
        "%s kept %d/%d majority rows (+%d synthesized), %d minority",
        sampler, kept.size, split.n_majority, 0 if synthesized is None else synthesized.shape[0], split.n_minority,
    )
    return ResampleOutcome(
        sampler=sampler,
        kept_majority=kept,
        kept_minority=split.minority_indices,
        balanced=balanced,
        synthesized_majority=synthesized,
        notes=dict(notes or {}),
    )


def _fit_minority(d: Dataset, split: ClassSplit, cfg: NusConfig, seed: int) -> TrainedReconstructor:
    spec = choose_architecture(d.m, cfg.threshold)
    return train_reconstructor(d.features[split.minority_indices], spec, replace(cfg.train, seed=seed))


def nus1(d: Dataset, cfg: NusConfig | None = None, seed: int = 0, *, reconstructor: TrainedReconstructor | None = None) -> ResampleOutcome:
    """Hard undersampling: keep the n1 majority rows the minority network reconstructs worst."""
    cfg = cfg or NusConfig()
    split = split_classes(d)
    model = reconstructor or _fit_minority(d, split, cfg, seed)

    records = reconstruction_distances(model, split.majority_indices, d.features)
    selected = [r.index for r in records[:split.n_minority]]
    return build_outcome(
        "nus1", d, split, selected,
        notes={"architecture": model.spec.kind, "layer_sizes": list(model.spec.layer_sizes)},
    )


def minority_thresholds(minority_distances) -> MinorityThresholds:
    """Largest minority distance, and the mean over the top ceil(n/2) of them."""
    dists = sorted((r.dist if isinstance(r, DistanceRecord) else float(r) for r in minority_distances), reverse=True)
    if not dists:
        raise EmptyInputError("no minority distances")
    half = math.ceil(len(dists) / 2)
    return MinorityThresholds(max_dist=dists[0], last_mid_avg=float(np.mean(dists[:half])))


def _passes(dist: float, t: MinorityThresholds, mode: str) -> bool:
    if mode == "max":
        return dist > t.max_dist
    if mode == "half_average":
        return dist > t.last_mid_avg
    # max_dist >= last_mid_avg, so this reduces to the half-average test
    return dist > t.max_dist or dist > t.last_mid_avg


def nus2(d: Dataset, cfg: NusConfig | None = None, seed: int = 0, *, reconstructor: TrainedReconstructor | None = None) -> ResampleOutcome:
    """Soft undersampling: keep majority rows reconstructed worse than the minority threshold."""
    cfg = cfg or NusConfig()
    split = split_classes(d)
    model = reconstructor or _fit_minority(d, split, cfg, seed)

    thresholds = minority_thresholds(reconstruction_distances(model, split.minority_indices, d.features))
    records = reconstruction_distances(model, split.majority_indices, d.features)
    selected = [r.index for r in records if _passes(r.dist, thresholds, cfg.threshold_mode)]

    if not selected:
        msg = (
            f"nus2 ({cfg.threshold_mode}) kept no majority rows: max_dist={thresholds.max_dist:.6g} "
            f"last_mid_avg={thresholds.last_mid_avg:.6g}"
        )
        log.warning(msg)
        warnings.warn(msg, EmptySelectionWarning, stacklevel=2)

    return build_outcome(
        "nus2", d, split, selected,
        notes={
            "architecture": model.spec.kind,
            "layer_sizes": list(model.spec.layer_sizes),
            "threshold_mode": cfg.threshold_mode,
            "max_dist": thresholds.max_dist,
            "last_mid_avg": thresholds.last_mid_avg,
        },
    )
