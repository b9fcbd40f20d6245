"""k-nearest-neighbor classifier (lazy learner, Euclidean metric)."""

from __future__ import annotations

import time

import numpy as np

from ..errors import ConfigError
from .base import Model, check_trainable


class KnnModel(Model):
    kind = "knn"

    def __init__(self, classes, train_x, train_y, k, seed=None, train_seconds=0.0):
        super().__init__(
            classes, seed=seed, hyperparams={"k": int(k)}, train_seconds=train_seconds
        )
        self.train_x = np.asarray(train_x, dtype=np.float64)
        self.train_y = np.asarray(train_y, dtype=np.int64)
        self.k = int(k)

    def _distances(self, X: np.ndarray) -> np.ndarray:
        # ||a-b||^2 = |a|^2 + |b|^2 - 2ab, clipped against tiny negatives.
        sq = (
            (X * X).sum(axis=1)[:, None]
            + (self.train_x * self.train_x).sum(axis=1)[None, :]
            - 2.0 * (X @ self.train_x.T)
        )
        return np.sqrt(np.clip(sq, 0.0, None))

    def rank_classes(self, x: np.ndarray) -> np.ndarray:
        return self.rank_classes_many(x[None, :])[0]

    def rank_classes_many(self, X: np.ndarray) -> np.ndarray:
        """Voted classes first by (votes, mean distance, class index); the
        rest by their nearest member's distance.

        Equidistant training points are taken in class-index order, so a
        duplicate feature vector with two labels resolves to the lower class
        index.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        dists = self._distances(X)
        n_train = self.train_x.shape[0]
        rows = np.arange(n_train)
        out = np.empty((X.shape[0], self.n_classes), dtype=np.int64)
        for q in range(X.shape[0]):
            d = dists[q]
            order = np.lexsort((rows, self.train_y, d))
            nearest = order[: self.k]
            votes = np.bincount(self.train_y[nearest], minlength=self.n_classes)
            dist_sum = np.zeros(self.n_classes)
            np.add.at(dist_sum, self.train_y[nearest], d[nearest])
            class_min = np.full(self.n_classes, np.inf)
            np.minimum.at(class_min, self.train_y, d)

            voted = np.flatnonzero(votes > 0)
            mean_dist = dist_sum[voted] / votes[voted]
            voted_order = voted[np.lexsort((voted, mean_dist, -votes[voted]))]
            unvoted = np.flatnonzero(votes == 0)
            unvoted_order = unvoted[np.lexsort((unvoted, class_min[unvoted]))]
            out[q] = np.concatenate([voted_order, unvoted_order])
        return out


def train_knn(train, k: int = 1, seed=None) -> KnnModel:
    """Store the training set verbatim; k defaults to the single nearest
    neighbor."""
    check_trainable(train)
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > len(train):
        raise ConfigError(f"k={k} exceeds training set size {len(train)}")
    t0 = time.perf_counter()
    classes = train.classes
    model = KnnModel(
        classes=classes,
        train_x=train.feature_matrix(),
        train_y=train.label_indices(classes),
        k=k,
        seed=seed,
        train_seconds=time.perf_counter() - t0,
    )
    return model
