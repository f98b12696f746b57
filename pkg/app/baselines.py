from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import Dataset, split_classes
from .errors import BadKError, BadVersionError
from .nus import ResampleOutcome, build_outcome

log = logging.getLogger("resamplelab.baselines")


# ------------------------------------------------
# Neighbor machinery
# ------------------------------------------------
@dataclass(frozen=True, eq=False)
class NeighborQuery:
    """Brute-force squared-Euclidean neighbors; distance ties go to the lower index."""

    reference: np.ndarray
    chunk_rows: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "reference", np.asarray(self.reference, dtype=float))

    @property
    def size(self) -> int:
        return int(self.reference.shape[0])

    def squared_distances(self, queries: np.ndarray) -> np.ndarray:
        return cdist(np.asarray(queries, dtype=float), self.reference, "sqeuclidean")

    def kneighbors(self, queries: np.ndarray, k: int, exclude=None) -> np.ndarray:
        """Indices of the k nearest reference rows per query row.

        `exclude` gives, per query row, one reference index to skip (the query
        itself when querying the reference set against itself).
        """
        Q = np.asarray(queries, dtype=float)
        available = self.size - (0 if exclude is None else 1)
        if not 1 <= k <= available:
            raise BadKError(f"k={k} outside 1..{available}")

        skip = None if exclude is None else np.asarray(exclude, dtype=int)
        out = np.empty((Q.shape[0], k), dtype=int)
        for start in range(0, Q.shape[0], self.chunk_rows):
            stop = min(start + self.chunk_rows, Q.shape[0])
            D = self.squared_distances(Q[start:stop])
            if skip is not None:
                D[np.arange(stop - start), skip[start:stop]] = np.inf
            out[start:stop] = np.argsort(D, axis=1, kind="stable")[:, :k]
        return out


def _outvoted(is_minority: np.ndarray, rows: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    # k-NN majority vote disagrees with the row's own class; an even split keeps the row
    same = (is_minority[neighbors] == is_minority[rows][:, None]).sum(axis=1)
    return same < neighbors.shape[1] - same


def _check_k(k: int, n: int) -> None:
    if not 1 <= k < n:
        raise BadKError(f"k={k} must satisfy 1 <= k < {n}")


def _minority_mask(d: Dataset, split) -> np.ndarray:
    mask = np.zeros(d.n, dtype=bool)
    mask[split.minority_indices] = True
    return mask


# ------------------------------------------------
# Samplers
# ------------------------------------------------
def random_undersample(d: Dataset, seed: int = 0) -> ResampleOutcome:
    split = split_classes(d)
    rng = np.random.default_rng(seed)
    kept = rng.choice(split.majority_indices, size=split.n_minority, replace=False)
    return build_outcome("rus", d, split, kept)


def near_miss(d: Dataset, version: int, k: int = 3) -> ResampleOutcome:
    """NearMiss undersampling.

    v1: keep the n1 majority rows with the smallest mean distance to their k nearest minority rows.
    v2: same, against their k farthest minority rows.
    v3: keep the k nearest majority rows of every minority row (union, deduplicated).
    """
    if version not in (1, 2, 3):
        raise BadVersionError(f"NearMiss version must be 1, 2 or 3, got {version!r}")
    split = split_classes(d)
    X = d.features
    X_maj = X[split.majority_indices]
    X_min = X[split.minority_indices]

    if version == 3:
        if not 1 <= k <= split.n_majority:
            raise BadKError(f"k={k} outside 1..{split.n_majority}")
        nearest = NeighborQuery(X_maj).kneighbors(X_min, k)
        kept = split.majority_indices[np.unique(nearest)]
        return build_outcome("nm3", d, split, kept, notes={"k": k})

    if not 1 <= k <= split.n_minority:
        raise BadKError(f"k={k} outside 1..{split.n_minority}")
    D = np.sort(np.sqrt(cdist(X_maj, X_min, "sqeuclidean")), axis=1)
    mean = D[:, :k].mean(axis=1) if version == 1 else D[:, -k:].mean(axis=1)
    order = np.lexsort((split.majority_indices, mean))
    kept = split.majority_indices[order[:split.n_minority]]
    return build_outcome(f"nm{version}", d, split, kept, notes={"k": k})


def tomek_links(d: Dataset) -> ResampleOutcome:
    """Drop the majority member of every cross-class mutual-nearest-neighbor pair."""
    split = split_classes(d)
    is_min = _minority_mask(d, split)
    rows = np.arange(d.n)
    nearest = NeighborQuery(d.features).kneighbors(d.features, 1, exclude=rows)[:, 0]
    linked = (nearest[nearest] == rows) & (is_min[nearest] != is_min)
    removed = rows[linked & ~is_min]
    kept = np.setdiff1d(split.majority_indices, removed)
    return build_outcome("tomek", d, split, kept, notes={"links": int(removed.size)})


def _enn_removed(X: np.ndarray, is_min: np.ndarray, k: int) -> np.ndarray:
    """Majority rows (as indices into X) outvoted by their k nearest neighbors."""
    candidates = np.flatnonzero(~is_min)
    if candidates.size == 0:
        return candidates
    nearest = NeighborQuery(X).kneighbors(X[candidates], k, exclude=candidates)
    return candidates[_outvoted(is_min, candidates, nearest)]


def enn(d: Dataset, k: int = 3) -> ResampleOutcome:
    _check_k(k, d.n)
    split = split_classes(d)
    removed = _enn_removed(d.features, _minority_mask(d, split), k)
    kept = np.setdiff1d(split.majority_indices, removed)
    return build_outcome("enn", d, split, kept, notes={"k": k})


def all_knn(d: Dataset, k_max: int = 3) -> ResampleOutcome:
    """ENN repeated for k = 1..k_max, each pass on the survivors of the last."""
    if k_max < 1:
        raise BadKError(f"k_max must be >= 1, got {k_max}")
    split = split_classes(d)
    is_min = _minority_mask(d, split)
    alive = np.ones(d.n, dtype=bool)

    for k in range(1, k_max + 1):
        current = np.flatnonzero(alive)
        if k >= current.size:
            log.warning("all_knn stopped before k=%d: only %d rows left", k, current.size)
            break
        removed = _enn_removed(d.features[current], is_min[current], k)
        alive[current[removed]] = False
        if not np.any(alive & ~is_min):
            break

    kept = split.majority_indices[alive[split.majority_indices]]
    return build_outcome("aknn", d, split, kept, notes={"k_max": k_max})


def ncr(d: Dataset, k: int = 3) -> ResampleOutcome:
    """Neighbourhood cleaning: ENN(k), plus the majority neighbors of outvoted minority rows."""
    _check_k(k, d.n)
    split = split_classes(d)
    is_min = _minority_mask(d, split)
    removed = set(_enn_removed(d.features, is_min, k).tolist())

    minority = split.minority_indices
    nearest = NeighborQuery(d.features).kneighbors(d.features[minority], k, exclude=minority)
    for row in nearest[_outvoted(is_min, minority, nearest)]:
        removed.update(int(i) for i in row if not is_min[i])

    kept = np.setdiff1d(split.majority_indices, np.fromiter(removed, dtype=int, count=len(removed)))
    return build_outcome("ncr", d, split, kept, notes={"k": k})


# ------------------------------------------------
# k-means / cluster centroids
# ------------------------------------------------
@dataclass(frozen=True, eq=False)
class KMeansModel:
    centroids: np.ndarray
    iterations_run: int
    inertia: float
    inertia_history: tuple[float, ...] = field(default=())

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


def _kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = cdist(X, centers[:1], "sqeuclidean")[:, 0]
    for i in range(1, k):
        total = closest.sum()
        # all points already coincide with a center
        idx = rng.integers(n) if total == 0 else rng.choice(n, p=closest / total)
        centers[i] = X[idx]
        closest = np.minimum(closest, cdist(X, centers[i:i + 1], "sqeuclidean")[:, 0])
    return centers


def kmeans(X: np.ndarray, k: int, seed: int = 0, max_iters: int = 300, tol: float = 1e-4) -> KMeansModel:
    """Lloyd's k-means with k-means++ seeding.

    Empty clusters are re-seeded to the point farthest from its own centroid.
    Stops when no centroid moves by `tol` or more, or after `max_iters`.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise BadKError(f"k={k} outside 1..{n}")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_plusplus(X, k, rng)
    history = []
    iterations = 0

    for iterations in range(1, max_iters + 1):
        D = cdist(X, centroids, "sqeuclidean")
        assign = np.argmin(D, axis=1)
        cost = D[np.arange(n), assign]
        history.append(float(cost.sum()))

        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, X)
        updated = centroids.copy()
        filled = counts > 0
        updated[filled] = sums[filled] / counts[filled, None]
        for c in np.flatnonzero(~filled):
            far = int(np.argmax(cost))
            updated[c] = X[far]
            cost[far] = 0.0

        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift < tol:
            break

    inertia = float(cdist(X, centroids, "sqeuclidean").min(axis=1).sum())
    centroids.setflags(write=False)
    return KMeansModel(centroids=centroids, iterations_run=iterations, inertia=inertia, inertia_history=tuple(history))


def cluster_centroids(d: Dataset, seed: int = 0) -> ResampleOutcome:
    """Replace the majority class with n1 k-means centroids."""
    split = split_classes(d)
    model = kmeans(d.features[split.majority_indices], split.n_minority, seed=seed)
    return build_outcome(
        "cc", d, split, [], synthesized=model.centroids,
        notes={"iterations": model.iterations_run, "inertia": model.inertia},
    )
