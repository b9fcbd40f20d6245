"""Uniform train/predict/top-k contract shared by all four classifiers.

Every model ranks the full class list; predict(x) is predict_topk(x, 1)[0]
by construction, and predict_topk(x, N) is a permutation of the classes.
All tie-breaking bottoms out at the lower class index (classes are sorted,
so indices are stable across runs).
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


class Model:
    kind = "base"

    def __init__(self, classes, seed=None, hyperparams=None, train_seconds=0.0):
        self.classes = list(classes)
        self.seed = seed
        self.hyperparams = dict(hyperparams or {})
        # Wall time is informational only; it is never serialized, so model
        # files stay byte-identical across reruns.
        self.train_seconds = train_seconds

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def rank_classes(self, x: np.ndarray) -> np.ndarray:
        """Full ranking of class indices, best first. Subclasses implement."""
        raise NotImplementedError

    def predict_topk(self, x, g: int) -> list[str]:
        if g < 1:
            raise DataError(f"top-k size must be >= 1, got {g}")
        order = self.rank_classes(np.asarray(x, dtype=np.float64))
        return [self.classes[i] for i in order[: min(g, self.n_classes)]]

    def predict(self, x) -> str:
        return self.predict_topk(x, 1)[0]

    def rank_classes_many(self, X: np.ndarray) -> np.ndarray:
        """(n, N) matrix of rankings; vectorized by subclasses where it pays."""
        return np.stack([self.rank_classes(x) for x in np.asarray(X, dtype=np.float64)])

    def predict_topk_many(self, X, g: int) -> list[list[str]]:
        rankings = self.rank_classes_many(np.asarray(X, dtype=np.float64))
        g = min(g, self.n_classes)
        return [[self.classes[i] for i in row[:g]] for row in rankings]

    def predict_many(self, X) -> list[str]:
        return [row[0] for row in self.predict_topk_many(X, 1)]


def rank_by_score(scores: np.ndarray) -> np.ndarray:
    """Class indices sorted by descending score, ties to the lower index.

    Works on a single score vector or a (n, N) batch.
    """
    scores = np.asarray(scores)
    idx = np.arange(scores.shape[-1])
    if scores.ndim == 1:
        return np.lexsort((idx, -scores))
    return np.lexsort((np.broadcast_to(idx, scores.shape), -scores), axis=-1)


def check_trainable(dataset, min_classes: int = 1):
    if not len(dataset):
        raise DataError("cannot train on an empty dataset")
    if dataset.n_classes < min_classes:
        raise DataError(
            f"need at least {min_classes} classes, dataset has {dataset.n_classes}"
        )
