"""k-means clustering of audio frames and the frame-wise quantizer."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from akvsr.errors import DataError, DimensionError
from akvsr.utils import get_logger

logger = get_logger(__name__)


class ClusterModel(BaseModel):
    """Fitted centroids plus fit statistics."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    centroids: np.ndarray = Field(..., description="[N x d_a]")
    iterations: int = Field(0, ge=0, description="Lloyd iterations run")
    inertia_history: list[float] = Field(default_factory=list)

    @field_validator("centroids", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim != 2 or not np.isfinite(array).all():
            raise ValueError("centroids must be a finite 2-D array")
        return array

    @property
    def num_clusters(self) -> int:
        """N."""
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        """Feature dimension."""
        return int(self.centroids.shape[1])

    @property
    def inertia(self) -> float:
        """Final within-cluster sum of squares."""
        return self.inertia_history[-1] if self.inertia_history else float("nan")


def squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """``[M x N]`` squared Euclidean distances."""
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def kmeans_plus_plus(x: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted sampling of initial centroids."""
    centroids = np.empty((n, x.shape[1]))
    centroids[0] = x[rng.integers(x.shape[0])]
    closest = ((x - centroids[0]) ** 2).sum(axis=1)
    for k in range(1, n):
        total = closest.sum()
        if total > 0:
            index = rng.choice(x.shape[0], p=closest / total)
        else:
            # every point already sits on a centroid
            index = rng.integers(x.shape[0])
        centroids[k] = x[index]
        closest = np.minimum(closest, ((x - centroids[k]) ** 2).sum(axis=1))
    return centroids


def _repair_empty(labels: np.ndarray, dists: np.ndarray, n: int) -> np.ndarray:
    """Give each empty cluster the point farthest from its own centroid."""
    labels = labels.copy()
    for cluster in range(n):
        counts = np.bincount(labels, minlength=n)
        if counts[cluster]:
            continue
        own = dists[np.arange(labels.shape[0]), labels]
        # never strip the last member of a donor cluster
        own = np.where(counts[labels] > 1, own, -np.inf)
        labels[int(np.argmax(own))] = cluster
    return labels


def fit_kmeans(features: np.ndarray, n: int, max_iter: int = 100, seed: int = 0) -> ClusterModel:
    """Fit k-means with k-means++ init and Lloyd iterations.

    Iterates until the assignment reaches a fixpoint or ``max_iter``.
    Inertia is recorded after every centroid update and never increases.

    Raises:
        DataError: if there are fewer points than clusters.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError("fit_kmeans", x.shape)
    if n < 1 or x.shape[0] < n:
        raise DataError(f"need at least N={n} points, got {x.shape[0]}")
    if max_iter < 1:
        raise DataError(f"max_iter must be >= 1, got {max_iter}")

    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(x, n, rng)
    labels = np.full(x.shape[0], -1)
    history: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dists = squared_distances(x, centroids)
        new_labels = _repair_empty(np.argmin(dists, axis=1), dists, n)
        converged = np.array_equal(new_labels, labels)
        labels = new_labels
        for cluster in range(n):
            centroids[cluster] = x[labels == cluster].mean(axis=0)
        history.append(float(((x - centroids[labels]) ** 2).sum()))
        if converged:
            break

    logger.debug(f"k-means N={n}: {iterations} iterations, inertia {history[-1]:.6g}")
    return ClusterModel(centroids=centroids, iterations=iterations, inertia_history=history)


def quantize(model: ClusterModel, features: np.ndarray) -> np.ndarray:
    """Nearest-centroid label per frame; ties go to the lowest index.

    Raises:
        DimensionError: if the feature dim differs from the centroids'.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DimensionError("quantize", x.shape, model.centroids.shape)
    return np.argmin(squared_distances(x, model.centroids), axis=1).astype(np.int64)
